#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gridstab {

inline constexpr std::size_t kNodeCount = 4;
inline constexpr std::size_t kFeatureCount = 12;
inline constexpr int kSchemaVersion = 1;

/// Column order of the star-grid stability CSV.
inline constexpr std::array<std::string_view, 14> kCsvColumns = {
    "tau1", "tau2", "tau3", "tau4", "p1", "p2", "p3", "p4",
    "g1",   "g2",   "g3",   "g4",   "stab", "stabf"};

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "tau1", "tau2", "tau3", "tau4", "p1", "p2", "p3", "p4", "g1", "g2", "g3", "g4"};

// Table-1 ranges.
inline constexpr double kTauMin = 0.5;
inline constexpr double kTauMax = 10.0;
inline constexpr double kConsumerPowerMin = -2.0;
inline constexpr double kConsumerPowerMax = -0.5;
inline constexpr double kSupplierPowerMin = 1.5;
inline constexpr double kSupplierPowerMax = 6.0;
inline constexpr double kGammaMin = 0.05;
inline constexpr double kGammaMax = 1.0;
inline constexpr double kBalanceTolerance = 1e-6;

enum class Label : std::uint8_t { Unstable = 0, Stable = 1 };

std::string_view to_string(Label label) noexcept;

/// Case-insensitive parse of "stable" / "unstable".
std::optional<Label> parse_label(std::string_view text) noexcept;

enum class ZeroPolicy : std::uint8_t { Stable, Unstable };

/// How the sign of the stability index maps onto a label.
///
/// The default ("paper") convention labels a positive index stable and a zero
/// index stable. `inverse()` is the eigenvalue convention used by simulated
/// grid data, where a negative index (decaying perturbation) is stable.
struct LabelConvention {
    bool positive_is_stable = true;
    ZeroPolicy zero_policy = ZeroPolicy::Stable;

    static LabelConvention paper() noexcept { return {true, ZeroPolicy::Stable}; }
    static LabelConvention inverse() noexcept { return {false, ZeroPolicy::Stable}; }

    Label label_for(double stab) const noexcept;
    std::string name() const;

    friend bool operator==(const LabelConvention&, const LabelConvention&) = default;
};

/// Parses "paper" or "inverse".
std::optional<LabelConvention> parse_convention(std::string_view name) noexcept;

/// One row of the dataset. Arrays are indexed by node: 0 is the supplier,
/// 1..3 the consumers.
struct GridSample {
    std::array<double, kNodeCount> tau{};
    std::array<double, kNodeCount> p{};
    std::array<double, kNodeCount> g{};
    double stab = 0.0;
    Label label = Label::Unstable;

    /// Features in schema order: tau1..tau4, p1..p4, g1..g4.
    std::array<double, kFeatureCount> features() const noexcept;

    friend bool operator==(const GridSample&, const GridSample&) = default;
};

struct RuleViolation {
    std::size_t row = 0;  // 1-based data row
    std::string rule;
    std::string detail;
};

/// Every invariant the row breaks. Rule names: tau_range, p1_range,
/// consumer_p_range, power_balance, g_range, label_sign, non_finite.
std::vector<RuleViolation> check_sample(const GridSample& sample, const LabelConvention& convention,
                                        std::size_t row);

/// Immutable ordered collection of samples.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<GridSample> samples, std::string provenance);

    std::span<const GridSample> samples() const noexcept { return samples_; }
    const GridSample& operator[](std::size_t i) const { return samples_[i]; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    const std::string& provenance() const noexcept { return provenance_; }
    int schema_version() const noexcept { return kSchemaVersion; }

    /// Rows `indices` in the given order.
    Dataset subset(std::span<const std::size_t> indices, std::string provenance) const;

    /// Row-major n x 12 feature matrix.
    std::vector<double> feature_matrix() const;
    std::vector<double> column(std::size_t feature) const;
    std::vector<double> stab_values() const;

private:
    std::vector<GridSample> samples_;
    std::string provenance_;
};

struct LoadOptions {
    LabelConvention convention = LabelConvention::paper();
    bool lenient = false;
};

struct LoadReport {
    Dataset dataset;
    std::vector<RuleViolation> dropped;  // only populated in lenient mode
};

/// Strict mode throws on the first problem and returns nothing partial.
/// Lenient mode drops offending rows and lists them in `dropped`.
LoadReport load_csv(const std::filesystem::path& path, const LoadOptions& options = {});
LoadReport parse_csv(std::string_view text, const LoadOptions& options = {},
                     std::string provenance = "memory");

std::string to_csv(const Dataset& dataset);
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

/// Shortest decimal text that reads back to the identical double.
std::string format_double(double value);

std::vector<int> encode_labels(const Dataset& dataset);
/// Throws UnknownLabelError(value, row) for anything but stable/unstable.
std::vector<int> encode_labels(std::span<const std::string> labels);
std::vector<Label> decode_labels(std::span<const int> encoded);

struct SplitIndices {
    std::vector<std::size_t> train;  // ascending
    std::vector<std::size_t> test;   // ascending
};

/// Test size is ceil(n * test_fraction); deterministic given the seed.
SplitIndices split_indices(std::size_t n, double test_fraction, std::uint64_t seed);
std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction,
                                  std::uint64_t seed);

}  // namespace gridstab
