#include "divergia/serialize.hpp"

#include "divergia/errors.hpp"

namespace divergia::serialize {

json to_json(const Rational& q) { return to_string(q); }

json to_json(const std::vector<Rational>& v) {
    json a = json::array();
    for (const auto& q : v) a.push_back(to_string(q));
    return a;
}

json to_json(const PowerValue& v) {
    json terms = json::array();
    for (const auto& [base, coeff] : v.terms()) terms.push_back({{"coeff", to_string(coeff)}, {"base", to_string(base)}});
    json out = {{"p", to_string(v.exponent().value())}, {"terms", terms}, {"expression", v.expression()},
                {"decimal", v.decimal()}};
    if (auto e = v.exact()) out["exact"] = to_string(*e);
    return out;
}

json to_json(const Interval& x) {
    return {{"lo", x.lo().to_string()}, {"hi", x.hi().to_string()}, {"mid", x.mid_double()}};
}

json to_json(const measure::StepFunction& f) {
    json pieces = json::array();
    for (const auto& pc : f.pieces())
        pieces.push_back({to_string(pc.start), to_string(pc.end), to_string(pc.value)});
    return {{"domain", f.domain().describe()}, {"pieces", pieces}};
}

json to_json(const dynsys::SystemModel& s) {
    json out = {{"kind", s.kind()}};
    if (auto* t = std::get_if<dynsys::Translation>(&s.model)) {
        out["step"] = to_string(t->step);
        out["modulus"] = to_string(t->modulus);
    } else if (auto* d = std::get_if<dynsys::DigitRotation>(&s.model)) {
        std::string digits;
        for (auto x : d->alpha.digits) digits += std::to_string(x) + ",";
        if (!digits.empty()) digits.pop_back();
        out["base"] = d->alpha.base;
        out["digits"] = digits;
        out["reserve"] = d->alpha.reserve;
        out["backward"] = d->backward;
    } else {
        const auto& m = std::get<dynsys::MapFamily>(s.model);
        json levels = json::array();
        for (const auto& lv : m.shifts) levels.push_back(to_json(lv));
        out["modulus"] = to_string(m.modulus);
        out["shifts"] = levels;
    }
    return out;
}

json to_json(const dynsys::MaximalReport& r) {
    json out = {{"p", to_json(r.ps)}, {"weak_p", json::array()}, {"f_strong_p", json::array()}, {"ratio", r.ratio}};
    for (const auto& v : r.weak_p) out["weak_p"].push_back(to_json(v));
    for (const auto& v : r.f_strong_p) out["f_strong_p"].push_back(to_json(v));
    json per = json::array();
    for (const auto& c : r.per_t)
        per.push_back({{"t", c.t},
                       {"weight", to_string(c.weight)},
                       {"peak", to_string(c.peak)},
                       {"measure_attaining", to_string(c.measure_attaining)}});
    out["per_t"] = per;
    return out;
}

json to_json(const constructions::ConstructionPlan& plan) {
    json out = {{"name", plan.name},
                {"inputs", plan.inputs},
                {"p", to_string(plan.p)},
                {"system", to_json(plan.system)},
                {"f", to_json(plan.f)},
                {"claimed_bound", to_json(plan.claimed_bound)},
                {"achieved", to_json(plan.achieved)},
                {"holds", plan.holds()},
                {"bookkeeping", plan.bookkeeping},
                {"times_count", plan.times.size()}};
    return out;
}

Rational rational_from(const json& j) {
    if (j.is_number_integer()) return Rational(BigInt(std::to_string(j.get<long long>())));
    if (j.is_string()) return parse_rational(j.get<std::string>());
    throw DomainError("expected a rational, got " + j.dump());
}

std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
        out += "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

}  // namespace divergia::serialize
