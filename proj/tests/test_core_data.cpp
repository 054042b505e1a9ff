#include "gridstab/core_data.hpp"
#include "gridstab/error.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

using namespace gridstab;
using gridstab::testing::random_dataset;
using gridstab::testing::TempDir;

namespace {

const std::string kHeader = "tau1,tau2,tau3,tau4,p1,p2,p3,p4,g1,g2,g3,g4,stab,stabf\n";
const std::string kRowStable = "2.959,3.080,8.381,9.781,3.763,-0.783,-1.257,-1.723,0.650,0.860,0.887,0.958,0.055,stable\n";
const std::string kRowUnstable = "9.304,4.902,3.047,1.369,5.067,-1.940,-1.873,-1.254,0.413,0.862,0.562,0.782,-0.0063,unstable\n";

}  // namespace

TEST(LabelConvention, PaperAndInverse) {
    const auto paper = LabelConvention::paper();
    EXPECT_EQ(paper.label_for(0.02), Label::Stable);
    EXPECT_EQ(paper.label_for(-0.02), Label::Unstable);
    EXPECT_EQ(paper.label_for(0.0), Label::Stable);
    const auto inv = LabelConvention::inverse();
    EXPECT_EQ(inv.label_for(0.02), Label::Unstable);
    EXPECT_EQ(inv.label_for(-0.02), Label::Stable);
    EXPECT_EQ(parse_convention("inverse"), inv);
    EXPECT_FALSE(parse_convention("eigen").has_value());
    EXPECT_EQ(parse_label("STABLE"), Label::Stable);
    EXPECT_FALSE(parse_label("maybe").has_value());
}

TEST(CheckSample, ReportsEachBrokenRule) {
    const auto ds = parse_csv(kHeader + kRowStable).dataset;
    GridSample s = ds[0];
    EXPECT_TRUE(check_sample(s, LabelConvention::paper(), 1).empty());

    auto rules = [](const std::vector<RuleViolation>& v) {
        std::set<std::string> out;
        for (const auto& r : v) out.insert(r.rule);
        return out;
    };
    GridSample bad = s;
    bad.tau[2] = 10.5;
    EXPECT_EQ(rules(check_sample(bad, LabelConvention::paper(), 1)), std::set<std::string>{"tau_range"});
    bad = s;
    bad.g[0] = 0.01;
    EXPECT_EQ(rules(check_sample(bad, LabelConvention::paper(), 1)), std::set<std::string>{"g_range"});
    bad = s;
    bad.p[0] += 0.01;
    EXPECT_TRUE(rules(check_sample(bad, LabelConvention::paper(), 1)).count("power_balance"));
    bad = s;
    bad.label = Label::Unstable;
    EXPECT_EQ(rules(check_sample(bad, LabelConvention::paper(), 1)), std::set<std::string>{"label_sign"});
    EXPECT_TRUE(check_sample(bad, LabelConvention::inverse(), 1).empty());
    bad = s;
    bad.p[1] = -2.5;
    bad.p[0] = 2.5 + 1.257 + 1.723;
    EXPECT_EQ(rules(check_sample(bad, LabelConvention::paper(), 1)), std::set<std::string>{"consumer_p_range"});
}

TEST(LoadCsv, ParsesValidRows) {
    const auto report = parse_csv(kHeader + kRowStable + kRowUnstable);
    ASSERT_EQ(report.dataset.size(), 2u);
    EXPECT_TRUE(report.dropped.empty());
    EXPECT_DOUBLE_EQ(report.dataset[0].tau[0], 2.959);
    EXPECT_DOUBLE_EQ(report.dataset[1].stab, -0.0063);
    EXPECT_EQ(report.dataset[1].label, Label::Unstable);
}

TEST(LoadCsv, EmptyInputIsHeaderMismatch) {
    try {
        parse_csv("");
        FAIL() << "expected HeaderMismatch";
    } catch (const HeaderMismatchError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::HeaderMismatch);
        EXPECT_EQ(e.expected().size(), 14u);
        EXPECT_TRUE(e.found().empty());
    }
}

TEST(LoadCsv, WrongHeaderListsColumns) {
    try {
        parse_csv("tau1,tau2\n1,2\n");
        FAIL();
    } catch (const HeaderMismatchError& e) {
        EXPECT_EQ(e.found(), (std::vector<std::string>{"tau1", "tau2"}));
    }
}

TEST(LoadCsv, RowParseErrorNamesRowAndColumn) {
    std::string row = kRowStable;
    row.replace(row.find("0.650"), 5, "abc");
    try {
        parse_csv(kHeader + kRowUnstable + row);
        FAIL();
    } catch (const RowParseError& e) {
        EXPECT_EQ(e.row(), 2u);
        EXPECT_EQ(e.column(), "g1");
    }
}

TEST(LoadCsv, InvariantViolationFailsAtomically) {
    std::string row = kRowStable;
    row.replace(0, 5, "11.00");
    try {
        parse_csv(kHeader + kRowUnstable + row);
        FAIL();
    } catch (const InvariantViolationError& e) {
        EXPECT_EQ(e.row(), 2u);
        EXPECT_EQ(e.rule(), "tau_range");
    }
}

TEST(LoadCsv, UnknownLabel) {
    std::string row = kRowStable;
    row.replace(row.find("stable"), 6, "steady");
    try {
        parse_csv(kHeader + row);
        FAIL();
    } catch (const UnknownLabelError& e) {
        EXPECT_EQ(e.value(), "steady");
        EXPECT_EQ(e.row(), 1u);
    }
}

TEST(LoadCsv, LenientDropsAndReports) {
    std::string bad_tau = kRowStable;
    bad_tau.replace(0, 5, "11.00");
    std::string bad_label = kRowStable;
    bad_label.replace(bad_label.find("stable"), 6, "unstable");
    const auto report = parse_csv(kHeader + kRowStable + bad_tau + kRowUnstable + bad_label,
                                  {LabelConvention::paper(), true});
    EXPECT_EQ(report.dataset.size(), 2u);
    ASSERT_EQ(report.dropped.size(), 2u);
    EXPECT_EQ(report.dropped[0].row, 2u);
    EXPECT_EQ(report.dropped[0].rule, "tau_range");
    EXPECT_EQ(report.dropped[1].row, 4u);
    EXPECT_EQ(report.dropped[1].rule, "label_sign");
}

TEST(LoadCsv, NoSurvivingRowsIsEmptyDataset) {
    try {
        parse_csv(kHeader);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyDataset);
    }
}

TEST(LoadCsv, MissingFile) {
    try {
        load_csv("/nonexistent/grid.csv");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingFile);
    }
}

TEST(LoadCsv, ToleratesCrlfAndBom) {
    std::string text = "\xEF\xBB\xBF" + kHeader + kRowStable;
    std::string crlf;
    for (char c : text) {
        if (c == '\n') crlf += '\r';
        crlf += c;
    }
    EXPECT_EQ(parse_csv(crlf).dataset.size(), 1u);
}

TEST(LoadCsv, RoundTripIsFieldAndByteIdentical) {
    TempDir dir;
    const auto original = random_dataset(100, 11);
    write_csv(original, dir / "a.csv");
    const auto reloaded = load_csv(dir / "a.csv").dataset;
    ASSERT_EQ(reloaded.size(), 100u);
    for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(reloaded[i], original[i]) << "row " << i;
    EXPECT_EQ(to_csv(reloaded), to_csv(original));
}

TEST(Labels, EncodeDecode) {
    const std::vector<std::string> labels{"stable", "unstable"};
    EXPECT_EQ(encode_labels(labels), (std::vector<int>{1, 0}));
    EXPECT_TRUE(encode_labels(std::span<const std::string>{}).empty());
    const std::vector<std::string> bad{"stable", "x"};
    try {
        encode_labels(bad);
        FAIL();
    } catch (const UnknownLabelError& e) {
        EXPECT_EQ(e.row(), 2u);
    }
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> v(rng() % 30);
        for (auto& s : v) s = rng() % 2 ? "stable" : "unstable";
        const auto decoded = decode_labels(encode_labels(v));
        ASSERT_EQ(decoded.size(), v.size());
        for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(to_string(decoded[i]), v[i]);
    }
}

TEST(Split, CardinalityAndDeterminism) {
    const auto s = split_indices(10, 0.2, 7);
    EXPECT_EQ(s.test.size(), 2u);
    EXPECT_EQ(s.train.size(), 8u);
    const auto again = split_indices(10, 0.2, 7);
    EXPECT_EQ(s.test, again.test);
    EXPECT_EQ(s.train, again.train);
}

TEST(Split, UnionIsEverythingForRandomTriples) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng() % 300;
        const double f = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
        SplitIndices s;
        try {
            s = split_indices(n, f, rng());
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::TooFewSamples);
            continue;
        }
        std::vector<std::size_t> all = s.train;
        all.insert(all.end(), s.test.begin(), s.test.end());
        std::sort(all.begin(), all.end());
        std::vector<std::size_t> expected(n);
        std::iota(expected.begin(), expected.end(), 0);
        ASSERT_EQ(all, expected) << "n=" << n << " f=" << f;
    }
}

TEST(Split, Errors) {
    EXPECT_THROW(split_indices(10, 0.0, 1), Error);
    EXPECT_THROW(split_indices(10, 1.0, 1), Error);
    try {
        split_indices(1, 0.5, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TooFewSamples);
    }
    try {
        split_indices(10, 0.0001, 1);
    } catch (...) {
        FAIL() << "ceil keeps one test row";
    }
    try {
        split_indices(3, 0.99, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TooFewSamples);
    }
}

TEST(Dataset, SubsetAndColumns) {
    const auto ds = random_dataset(5, 3);
    const std::vector<std::size_t> rows{4, 1};
    const auto sub = ds.subset(rows, "sub");
    ASSERT_EQ(sub.size(), 2u);
    EXPECT_EQ(sub[0], ds[4]);
    EXPECT_EQ(sub[1], ds[1]);
    const auto col = ds.column(8);
    EXPECT_DOUBLE_EQ(col[2], ds[2].g[0]);
    const auto fm = ds.feature_matrix();
    EXPECT_DOUBLE_EQ(fm[3 * kFeatureCount + 5], ds[3].p[1]);
}
