#include "gridstab/attack_model.hpp"

#include "gridstab/error.hpp"

#include <algorithm>
#include <unordered_set>

namespace gridstab::attack {

AttackScenario::AttackScenario(std::vector<CustomerDemand> customers,
                               std::set<std::string> compromised, double supply_capacity)
    : customers_(std::move(customers)),
      compromised_(std::move(compromised)),
      supply_capacity_(supply_capacity) {
    if (!(supply_capacity_ >= 0.0))
        throw Error(ErrorKind::BadScenario, "supply capacity must be >= 0");
    std::unordered_set<std::string> seen;
    for (const auto& c : customers_) {
        if (!(c.true_demand >= 0.0) || !(c.reported_demand >= 0.0))
            throw Error(ErrorKind::BadScenario, "customer " + c.id + " has a negative demand");
        if (!seen.insert(c.id).second)
            throw Error(ErrorKind::BadScenario, "duplicate customer id " + c.id);
    }
}

double delta_demand(const CustomerDemand& c) noexcept { return c.reported_demand - c.true_demand; }

double aggregate_loss(const AttackScenario& s) {
    for (const auto& id : s.compromised()) {
        const bool known = std::any_of(s.customers().begin(), s.customers().end(),
                                       [&](const CustomerDemand& c) { return c.id == id; });
        if (!known)
            throw Error(ErrorKind::UnknownCustomerInSet, "compromised id " + id + " is not a customer");
    }
    double loss = 0.0;
    for (const auto& c : s.customers()) {
        if (s.compromised().contains(c.id)) loss += delta_demand(c);
    }
    return loss;
}

ShortageReport shortage_report(const AttackScenario& s) {
    ShortageReport r;
    for (const auto& c : s.customers()) r.total_requested += c.reported_demand;
    r.shortfall = std::max(0.0, r.total_requested - s.supply_capacity());
    r.affected = r.shortfall > 0.0;
    return r;
}

AttackScenario scenario_from_json(const nlohmann::json& doc) {
    try {
        std::vector<CustomerDemand> customers;
        for (const auto& c : doc.at("customers")) {
            const auto& id = c.at("id");
            customers.push_back({id.is_string() ? id.get<std::string>() : id.dump(),
                                 c.at("true").get<double>(), c.at("reported").get<double>()});
        }
        std::set<std::string> compromised;
        if (doc.contains("compromised")) {
            for (const auto& id : doc.at("compromised"))
                compromised.insert(id.is_string() ? id.get<std::string>() : id.dump());
        }
        return AttackScenario(std::move(customers), std::move(compromised),
                              doc.at("capacity").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::BadScenario, std::string("scenario JSON: ") + e.what());
    }
}

nlohmann::json to_json(const AttackScenario& s) {
    nlohmann::json customers = nlohmann::json::array();
    for (const auto& c : s.customers())
        customers.push_back({{"id", c.id}, {"true", c.true_demand}, {"reported", c.reported_demand}});
    return {{"capacity", s.supply_capacity()},
            {"customers", customers},
            {"compromised", s.compromised()}};
}

nlohmann::json to_json(const ShortageReport& r) {
    return {{"total_requested", r.total_requested},
            {"shortfall", r.shortfall},
            {"affected", r.affected}};
}

nlohmann::json attack_report(const AttackScenario& s) {
    nlohmann::json per_customer = nlohmann::json::array();
    for (const auto& c : s.customers()) {
        per_customer.push_back({{"id", c.id},
                                {"delta_demand", delta_demand(c)},
                                {"compromised", s.compromised().contains(c.id)}});
    }
    return {{"customers", per_customer},
            {"aggregate_loss", aggregate_loss(s)},
            {"shortage", to_json(shortage_report(s))}};
}

}  // namespace gridstab::attack
