#pragma once

#include <nlohmann/json.hpp>

#include <set>
#include <string>
#include <vector>

namespace gridstab::attack {

struct CustomerDemand {
    std::string id;
    double true_demand = 0.0;      // D_T
    double reported_demand = 0.0;  // D_F, what the grid is asked to deliver
};

/// Customers, the ids whose reported demand was falsified, and the supply
/// the grid can deliver. Demands and capacity are validated non-negative on
/// construction; membership of `compromised` is checked when the loss is
/// aggregated.
class AttackScenario {
public:
    AttackScenario(std::vector<CustomerDemand> customers, std::set<std::string> compromised,
                   double supply_capacity);

    const std::vector<CustomerDemand>& customers() const noexcept { return customers_; }
    const std::set<std::string>& compromised() const noexcept { return compromised_; }
    double supply_capacity() const noexcept { return supply_capacity_; }

private:
    std::vector<CustomerDemand> customers_;
    std::set<std::string> compromised_;
    double supply_capacity_;
};

struct ShortageReport {
    double total_requested = 0.0;
    double shortfall = 0.0;
    bool affected = false;
};

/// D_F - D_T; negative for under-reporting.
double delta_demand(const CustomerDemand& c) noexcept;

/// Sum of delta_demand over the compromised set, in customer-list order.
/// Throws UnknownCustomerInSet for an id that names no customer.
double aggregate_loss(const AttackScenario& scenario);

ShortageReport shortage_report(const AttackScenario& scenario);

AttackScenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const AttackScenario& scenario);
nlohmann::json to_json(const ShortageReport& report);

/// Full report document: per-customer deltas, aggregate loss, shortage.
nlohmann::json attack_report(const AttackScenario& scenario);

}  // namespace gridstab::attack
