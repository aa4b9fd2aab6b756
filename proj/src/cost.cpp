#include "cryoreduce/cost.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "binary_io.hpp"
#include "cryoreduce/errors.hpp"

namespace cryoreduce {

namespace {

using int128 = __int128;

// value is a nonnegative amount in fixed-point units of (1/unit_per_cent)
// cents; rounds half up to whole cents.
std::int64_t round_half_up_to_cents(int128 value, int128 unit_per_cent) {
    return static_cast<std::int64_t>((value + unit_per_cent / 2) / unit_per_cent);
}

bool valid_scheme_name(const std::string& name) {
    return name == "on_demand" || name == "spot" || name == "reserved" || name == "dedicated";
}

}  // namespace

std::string Money::str() const {
    const bool negative = cents_ < 0;
    const std::int64_t abs_cents = negative ? -cents_ : cents_;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%s%lld.%02lld", negative ? "-" : "",
                  static_cast<long long>(abs_cents / 100),
                  static_cast<long long>(abs_cents % 100));
    return buf;
}

Decimal Decimal::from_micros(std::int64_t micros) {
    if (micros < 0) throw ValidationError("negative quantity");
    Decimal d;
    d.micros_ = micros;
    return d;
}

Decimal Decimal::parse(const std::string& text) {
    if (text.empty()) throw ValidationError("empty decimal");
    std::size_t pos = 0;
    if (text[pos] == '+') ++pos;
    if (pos < text.size() && text[pos] == '-')
        throw ValidationError("negative quantity: " + text);

    std::int64_t whole = 0;
    bool any_digits = false;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        whole = whole * 10 + (text[pos] - '0');
        if (whole > 1'000'000'000'000ll) throw ValidationError("quantity too large: " + text);
        any_digits = true;
        ++pos;
    }
    std::int64_t frac = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        int digits = 0;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            if (digits < 6) frac = frac * 10 + (text[pos] - '0');
            else if (text[pos] != '0')
                throw ValidationError("more than 6 decimal places: " + text);
            ++digits;
            any_digits = true;
            ++pos;
        }
        for (; digits < 6; ++digits) frac *= 10;
    }
    if (!any_digits || pos != text.size())
        throw ValidationError("bad decimal: " + text);
    return from_micros(whole * 1'000'000 + frac);
}

Decimal Decimal::from_double(double value) {
    if (!std::isfinite(value)) throw ValidationError("non-finite quantity");
    if (value < 0.0) throw ValidationError("negative quantity");
    return from_micros(static_cast<std::int64_t>(std::llround(value * 1e6)));
}

std::string Decimal::str() const {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%lld.%06lld", static_cast<long long>(micros_ / 1'000'000),
                  static_cast<long long>(micros_ % 1'000'000));
    std::string s = buf;
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return s;
}

CostEstimate estimate(const PricingScheme& scheme, const Workload& workload) {
    if (workload.instance_count < 0) throw ValidationError("negative instance count");

    // compute: rate * hours * instances. micros^2 * count = 1e-12 dollars,
    // so one cent is 1e10 units.
    const int128 compute_units = static_cast<int128>(scheme.compute_rate.micros()) *
                                 workload.compute_hours.micros() * workload.instance_count;
    // storage: rate * data * months in micros^3 = 1e-18 dollars; one cent is
    // 1e16 units.
    const int128 storage_units = static_cast<int128>(scheme.storage_rate.micros()) *
                                 workload.data_gb.micros() * workload.storage_months.micros();

    CostEstimate out;
    out.scheme = scheme.name;
    out.workload = workload;
    out.compute = Money::from_cents(round_half_up_to_cents(compute_units, int128(10'000'000'000ll)));
    out.storage = Money::from_cents(
        round_half_up_to_cents(storage_units, int128(10'000'000'000ll) * 1'000'000));
    out.upfront = Money::from_cents(round_half_up_to_cents(scheme.upfront.micros(), 10'000));
    out.total = out.compute + out.storage + out.upfront;
    return out;
}

std::vector<ComparedEstimate> compare(const std::vector<PricingScheme>& schemes,
                                      const Workload& workload) {
    if (schemes.size() < 2)
        throw ValidationError("compare needs at least 2 pricing schemes, got " +
                              std::to_string(schemes.size()));

    std::vector<ComparedEstimate> out;
    out.reserve(schemes.size());
    for (const auto& scheme : schemes) out.push_back({estimate(scheme, workload), 0.0});
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.estimate.total.cents() < b.estimate.total.cents();
    });

    const std::int64_t max_cents = out.back().estimate.total.cents();
    for (auto& entry : out) {
        entry.savings_pct =
            max_cents == 0
                ? 0.0
                : 100.0 * static_cast<double>(max_cents - entry.estimate.total.cents()) /
                      static_cast<double>(max_cents);
    }
    return out;
}

SpotDecision spot_decision(double bid_per_hour, double current_price_per_hour) {
    if (!(bid_per_hour >= 0.0) || !(current_price_per_hour >= 0.0))
        throw ValidationError("bid and price must be >= 0");
    return current_price_per_hour < bid_per_hour ? SpotDecision::Start
                                                 : SpotDecision::Terminate;
}

Money reduction_savings(Decimal before_gb, Decimal after_gb, Decimal storage_rate,
                        Decimal months) {
    if (after_gb.micros() > before_gb.micros())
        throw ValidationError("after_gb exceeds before_gb");
    const int128 removed = before_gb.micros() - after_gb.micros();
    const int128 units = removed * storage_rate.micros() * months.micros();
    return Money::from_cents(round_half_up_to_cents(units, int128(10'000'000'000ll) * 1'000'000));
}

std::vector<PricingScheme> load_pricing_config(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(io::read_file_bytes(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad pricing config " + path.string() + ": " + e.what());
    }
    if (!doc.is_array()) throw FormatError("pricing config must be a JSON array of schemes");

    auto decimal_field = [&](const nlohmann::json& obj, const char* field) {
        const auto& v = obj.at(field);
        if (v.is_string()) return Decimal::parse(v.get<std::string>());
        if (v.is_number()) return Decimal::from_double(v.get<double>());
        throw FormatError(std::string("pricing field '") + field +
                          "' must be a number or decimal string");
    };

    std::vector<PricingScheme> schemes;
    for (const auto& obj : doc) {
        PricingScheme s;
        try {
            s.name = obj.at("name").get<std::string>();
            s.compute_rate = decimal_field(obj, "compute_rate");
            s.upfront = decimal_field(obj, "upfront");
            s.storage_rate = decimal_field(obj, "storage_rate");
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("bad pricing config " + path.string() + ": " + e.what());
        }
        if (!valid_scheme_name(s.name))
            throw FormatError("unknown pricing scheme '" + s.name +
                              "' (want on_demand, spot, reserved or dedicated)");
        if (s.name == "spot" && s.upfront.micros() != 0)
            throw FormatError("spot pricing cannot carry upfront costs");
        schemes.push_back(std::move(s));
    }
    if (schemes.empty()) throw FormatError("pricing config lists no schemes");
    return schemes;
}

const PricingScheme& find_scheme(const std::vector<PricingScheme>& schemes,
                                 const std::string& name) {
    for (const auto& s : schemes)
        if (s.name == name) return s;
    throw ValidationError("pricing scheme '" + name + "' not present in config");
}

}  // namespace cryoreduce
