#ifndef CRYOREDUCE_COST_HPP
#define CRYOREDUCE_COST_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cryoreduce {

// Exact money in integer cents.
class Money {
public:
    Money() = default;
    static Money from_cents(std::int64_t cents) { return Money(cents); }
    std::int64_t cents() const { return cents_; }
    double dollars() const { return static_cast<double>(cents_) / 100.0; }
    std::string str() const;  // "11673.60"

    Money operator+(Money other) const { return Money(cents_ + other.cents_); }
    Money operator-(Money other) const { return Money(cents_ - other.cents_); }
    auto operator<=>(const Money&) const = default;

private:
    explicit Money(std::int64_t cents) : cents_(cents) {}
    std::int64_t cents_ = 0;
};

// Nonnegative fixed-point quantity with 6 fractional digits, used for rates
// and workload sizes so estimates are exact up to one final half-up rounding
// to cents.
class Decimal {
public:
    Decimal() = default;
    static Decimal from_micros(std::int64_t micros);
    static Decimal parse(const std::string& text);  // "0.96", "2000"
    static Decimal from_double(double value);       // rounds to 6 digits

    std::int64_t micros() const { return micros_; }
    double value() const { return static_cast<double>(micros_) / 1e6; }
    std::string str() const;
    auto operator<=>(const Decimal&) const = default;

private:
    std::int64_t micros_ = 0;
};

struct PricingScheme {
    std::string name;      // on_demand | spot | reserved | dedicated
    Decimal compute_rate;  // dollars per instance-hour
    Decimal upfront;       // dollars
    Decimal storage_rate;  // dollars per GB-month
};

struct Workload {
    Decimal data_gb;
    Decimal compute_hours;
    std::int64_t instance_count = 0;
    Decimal storage_months;
};

struct CostEstimate {
    std::string scheme;
    Workload workload;
    Money compute;
    Money storage;
    Money upfront;
    Money total;  // compute + storage + upfront, exact in cents
};

// compute = compute_rate * hours * instances, storage = storage_rate *
// data_gb * months, each rounded half-up to cents once; total is the exact
// cent sum. Negative quantities are rejected.
CostEstimate estimate(const PricingScheme& scheme, const Workload& workload);

struct ComparedEstimate {
    CostEstimate estimate;
    double savings_pct = 0.0;  // (max_total - total) / max_total * 100
};

// Estimates every scheme, sorted ascending by total. Savings are relative to
// the most expensive scheme, whose savings are 0. Requires >= 2 schemes.
std::vector<ComparedEstimate> compare(const std::vector<PricingScheme>& schemes,
                                      const Workload& workload);

enum class SpotDecision { Start, Terminate };

// Start iff current_price < bid, strictly; price == bid terminates.
SpotDecision spot_decision(double bid_per_hour, double current_price_per_hour);

// Storage dollars saved by shrinking the stored data:
// (before_gb - after_gb) * storage_rate * months. Requires after <= before.
Money reduction_savings(Decimal before_gb, Decimal after_gb, Decimal storage_rate,
                        Decimal months);

// JSON array of {name, compute_rate, upfront, storage_rate}; rates may be
// numbers or decimal strings. Validates names, nonnegative rates, and that
// spot carries no upfront cost.
std::vector<PricingScheme> load_pricing_config(const std::filesystem::path& path);

const PricingScheme& find_scheme(const std::vector<PricingScheme>& schemes,
                                 const std::string& name);

}  // namespace cryoreduce

#endif
