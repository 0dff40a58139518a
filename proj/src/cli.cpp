#include "divergia/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "divergia/constructions.hpp"
#include "divergia/dynsys.hpp"
#include "divergia/errors.hpp"
#include "divergia/khintchine.hpp"
#include "divergia/serialize.hpp"
#include "divergia/weights.hpp"

namespace divergia::cli {

namespace {

using serialize::to_json;
using weights::WeightSequence;
namespace kh = khintchine;
namespace cs = constructions;

// ---------------------------------------------------------------- config access

void allow_only(const json& cfg, const std::string& experiment, std::set<std::string> keys) {
    if (!cfg.is_object()) throw UsageError("config must be a JSON object");
    keys.insert({"experiment", "seed", "out"});
    for (const auto& [k, v] : cfg.items())
        if (!keys.count(k)) throw UsageError("unknown key '" + k + "' for experiment " + experiment);
}

const json& need(const json& cfg, const std::string& key) {
    if (!cfg.contains(key)) throw UsageError("missing key '" + key + "'");
    return cfg.at(key);
}

// integer, or a "b^e" string such as "2^16"
std::uint64_t count_from(const json& j, const std::string& key) {
    try {
        if (j.is_number_unsigned() || (j.is_number_integer() && j.get<long long>() >= 0)) return j.get<std::uint64_t>();
        if (j.is_string()) {
            const auto s = j.get<std::string>();
            const auto caret = s.find('^');
            if (caret == std::string::npos) return std::stoull(s);
            const std::uint64_t b = std::stoull(s.substr(0, caret));
            const std::uint64_t e = std::stoull(s.substr(caret + 1));
            std::uint64_t out = 1;
            for (std::uint64_t i = 0; i < e; ++i) {
                if (out > std::numeric_limits<std::uint64_t>::max() / std::max<std::uint64_t>(b, 1))
                    throw UsageError("value of '" + key + "' overflows");
                out *= b;
            }
            return out;
        }
    } catch (const std::logic_error&) {
    }
    throw UsageError("key '" + key + "' needs a nonnegative integer or b^e, got " + j.dump());
}

std::uint64_t count_of(const json& cfg, const std::string& key, std::optional<std::uint64_t> dflt = {}) {
    if (!cfg.contains(key)) {
        if (dflt) return *dflt;
        throw UsageError("missing key '" + key + "'");
    }
    return count_from(cfg.at(key), key);
}

Rational rational_of(const json& cfg, const std::string& key, std::optional<Rational> dflt = {}) {
    if (!cfg.contains(key)) {
        if (dflt) return *dflt;
        throw UsageError("missing key '" + key + "'");
    }
    try {
        return serialize::rational_from(cfg.at(key));
    } catch (const DomainError& e) {
        throw UsageError("key '" + key + "': " + e.what());
    }
}

std::vector<std::uint64_t> counts_of(const json& cfg, const std::string& key) {
    const json& a = need(cfg, key);
    if (!a.is_array()) throw UsageError("key '" + key + "' must be a list");
    std::vector<std::uint64_t> out;
    for (const auto& x : a) out.push_back(count_from(x, key));
    return out;
}

std::vector<unsigned long> levels_of(const json& cfg, const std::string& key) {
    std::vector<unsigned long> out;
    for (auto x : counts_of(cfg, key)) out.push_back(static_cast<unsigned long>(x));
    return out;
}

std::string string_of(const json& cfg, const std::string& key, std::optional<std::string> dflt = {}) {
    if (!cfg.contains(key)) {
        if (dflt) return *dflt;
        throw UsageError("missing key '" + key + "'");
    }
    if (!cfg.at(key).is_string()) throw UsageError("key '" + key + "' must be a string");
    return cfg.at(key).get<std::string>();
}

bool bool_of(const json& cfg, const std::string& key, bool dflt) {
    if (!cfg.contains(key)) return dflt;
    if (!cfg.at(key).is_boolean()) throw UsageError("key '" + key + "' must be true or false");
    return cfg.at(key).get<bool>();
}

// {"tag": ..., "horizon": ...} or a list of rationals
WeightSequence weights_of(const json& w, const std::string& key) {
    if (w.is_array()) {
        std::vector<Rational> v;
        for (const auto& x : w) v.push_back(serialize::rational_from(x));
        return WeightSequence::from_values(std::move(v));
    }
    if (w.is_object()) {
        for (const auto& [k, v] : w.items())
            if (k != "tag" && k != "horizon") throw UsageError("unknown key '" + key + "." + k + "'");
        return weights::materialize(string_of(w, "tag"), count_of(w, "horizon"));
    }
    throw UsageError("key '" + key + "' must be a list of rationals or {tag, horizon}");
}

// ---------------------------------------------------------------- report helpers

void check(RunReport& r, std::string name, std::string bound, std::string achieved, bool pass) {
    r.assertions.push_back({std::move(name), std::move(bound), std::move(achieved), pass});
}

json functional_json(const weights::WeightFunctionalReport& f) {
    json out = {{"functional", weights::to_string(f.functional)},
                {"p", to_string(f.p)},
                {"value_power", to_json(f.value_power)},
                {"decimal", f.decimal()},
                {"argmax_threshold", to_string(f.argmax_threshold)},
                {"contributing", f.contributing_indices.size()}};
    if (auto e = f.exact_value()) out["exact"] = to_string(*e);
    return out;
}

std::string cell(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::string s;
        for (const auto& x : v) s += (s.empty() ? "" : ";") + cell(x);
        return s;
    }
    return v.dump();
}

// array of flat objects -> CSV over the union of keys
std::string table_csv(const json& rows) {
    std::vector<std::string> header;
    for (const auto& r : rows)
        for (const auto& [k, v] : r.items())
            if (std::find(header.begin(), header.end(), k) == header.end()) header.push_back(k);
    std::vector<std::vector<std::string>> body;
    for (const auto& r : rows) {
        std::vector<std::string> line;
        for (const auto& h : header) line.push_back(r.contains(h) ? cell(r.at(h)) : "");
        body.push_back(std::move(line));
    }
    return serialize::csv(header, body);
}

std::string short_dump(const json& j) {
    std::string s = j.is_string() ? j.get<std::string>() : j.dump();
    return s.size() > 240 ? s.substr(0, 240) + "...(" + std::to_string(s.size()) + " chars)" : s;
}

// ---------------------------------------------------------------- experiments

void weights_analyze(RunReport& r, json& cfg) {
    allow_only(cfg, r.experiment, {"tag", "values", "horizon", "p", "curve"});
    WeightSequence w;
    if (cfg.contains("values")) {
        w = weights_of(cfg.at("values"), "values");
    } else {
        w = weights::materialize(string_of(cfg, "tag"), count_of(cfg, "horizon"));
        cfg["horizon"] = w.horizon();
    }
    const Rational p = rational_of(cfg, "p", Rational(1));
    cfg["p"] = to_string(p);
    const bool curve = bool_of(cfg, "curve", true);
    cfg["curve"] = curve;

    const auto c1 = weights::c1(w);
    const auto hardy = weights::classify_hardy(w, p);
    r.results = {{"horizon", w.horizon()},
                 {"tag", w.tag},
                 {"c1", functional_json(c1)},
                 {"c1_prime", functional_json(weights::c1_prime(w))},
                 {"weak_norm", functional_json(weights::weak_norm_seq(w, p))},
                 {"cp", functional_json(weights::cp(w, p))},
                 {"hardy",
                  {{"verdict", weights::to_string(hardy.verdict)},
                   {"first_half_max", hardy.first_half_max},
                   {"last_half_max", hardy.last_half_max},
                   {"dyadic_block_max", hardy.dyadic_block_max}}}};

    const Rational c1v = *c1.exact_value();
    check(r, "c1 equals the window sum at its argmax", to_string(c1v),
          to_string(weights::c1_window_sum(w, c1.argmax_threshold)), weights::c1_window_sum(w, c1.argmax_threshold) == c1v);
    // a geometric grid of thresholds never beats the breakpoint scan
    Rational worst = 0;
    for (int i = 0; i <= 256; ++i) {
        const Rational y = pow2(-static_cast<long>(i) / 4) * Rational(3 + i % 4, 4);
        worst = std::max(worst, weights::c1_window_sum(w, y));
    }
    check(r, "c1 dominates 257 grid thresholds", to_string(c1v), to_string(worst), worst <= c1v);

    if (curve) {
        std::vector<std::vector<std::string>> rows;
        for (std::size_t h = 16; h <= w.horizon(); h *= 2) {
            const auto part = weights::c1(w.truncated(h));
            rows.push_back({std::to_string(h), to_string(*part.exact_value()), part.decimal(12)});
        }
        r.csv["weights-analyze_c1_curve.csv"] = serialize::csv({"horizon", "c1", "c1_decimal"}, rows);
    }
}

void plan_result(RunReport& r, const cs::ConstructionPlan& plan) {
    r.plan = to_json(plan);
    r.results = {{"name", plan.name},
                 {"claimed_bound", to_json(plan.claimed_bound)},
                 {"achieved", to_json(plan.achieved)},
                 {"bookkeeping", plan.bookkeeping},
                 {"system_kind", plan.system.kind()}};
}

void ubl1(RunReport& r, json& cfg) {
    allow_only(cfg, r.experiment, {"weights", "M", "sequence", "n0"});
    const auto w = weights_of(need(cfg, "weights"), "weights");
    const auto M = count_of(cfg, "M");
    const auto seq = cs::TimeSequence::parse(string_of(cfg, "sequence"));
    const auto n0 = count_of(cfg, "n0", 0);
    cfg["n0"] = n0;
    const auto plan = cs::build_ubL1(w, M, seq, n0);
    plan_result(r, plan);
    const auto& bk = plan.bookkeeping;
    check(r, "mu{sup_t w_t A_t f >= 1} = 1", "1", bk.at("exceedance_measure"), bk.at("exceedance_measure") == "1");
    if (bk.at("K").get<unsigned long>() > 1) {
        const Rational target = 4 / Rational(M);
        check(r, "||f||_1 = 4/M", to_string(target), bk.at("f_L1"), bk.at("f_L1") == to_string(target));
    }
    check(r, "weak-(1,1) ratio >= M/4", plan.claimed_bound.expression(), plan.achieved.expression(), plan.holds());
}

void ublp(RunReport& r, json& cfg) {
    allow_only(cfg, r.experiment, {"J", "p", "n0", "sequence"});
    const auto J = levels_of(cfg, "J");
    const Rational p = rational_of(cfg, "p");
    const auto seq = cs::TimeSequence::parse(string_of(cfg, "sequence"));
    const auto n0 = count_of(cfg, "n0", 0);
    cfg["n0"] = n0;
    cfg["p"] = to_string(p);
    const auto plan = cs::build_ubLp(J, p, n0, seq);
    plan_result(r, plan);
    const auto& bk = plan.bookkeeping;
    // K = 1 makes f constant and the indicator formula does not apply
    if (bk.at("branch") != "constant" && bk.at("K").get<unsigned long>() > 1) {
        const auto K = bk.at("K").get<unsigned long>();
        const auto target = PowerValue::monomial(Rational(2) / Rational(K), 2, Exponent::from(p));
        check(r, "||f||_p^p = 2^(p+1)/K", target.expression(), bk.at("f_strong_p"),
              bk.at("f_strong_p") == target.expression());
    }
    check(r, "(||max_j A_j f||_(p,inf) / ||f||_p)^p >= claimed", plan.claimed_bound.expression(),
          plan.achieved.expression(), plan.holds());
}

void infection(RunReport& r, json& cfg) {
    allow_only(cfg, r.experiment, {"k", "y", "weights"});
    const auto k = count_of(cfg, "k");
    const auto y = count_of(cfg, "y");
    const auto w = weights_of(need(cfg, "weights"), "weights");
    const auto plan = cs::build_infection(k, w, y);
    plan_result(r, plan);
    const auto& bk = plan.bookkeeping;
    const Rational lhs = parse_rational(bk.at("l_y").get<std::string>()) + parse_rational(bk.at("l_2y").get<std::string>());
    const Rational rhs = parse_rational(bk.at("m_y").get<std::string>()) - 9;
    check(r, "l_y + l_2y > m_y - 9", to_string(rhs), to_string(lhs), lhs > rhs);
    check(r, "infected measure <= ||sup||_(1,inf)", plan.claimed_bound.expression(), plan.achieved.expression(),
          plan.holds());
    if (bk.contains("blocks") && !bk.at("blocks").empty()) r.csv["infection_blocks.csv"] = table_csv(bk.at("blocks"));
}

void sumset(RunReport& r, json& cfg) {
    allow_only(cfg, r.experiment, {"k", "J", "p"});
    const auto k = count_of(cfg, "k");
    const auto J = levels_of(cfg, "J");
    const Rational p = rational_of(cfg, "p");
    cfg["p"] = to_string(p);
    const auto res = cs::build_sumset(k, J, p);
    const auto& in = res.instance;
    const auto& c = res.checks;
    r.results = {{"B_size", in.B.size()},
                 {"C_size", in.C.size()},
                 {"window_right", in.window_right},
                 {"isa", res.isa},
                 {"report", to_json(res.report)}};
    const auto nB = std::to_string(in.B.size());
    check(r, "unique decomposition of B", "|B| distinct sums", nB, c.unique_decomposition);
    check(r, "|C| >= |B|/2", to_string(Rational(static_cast<unsigned long>(in.B.size())) / 2), std::to_string(in.C.size()),
          c.c_large);
    check(r, "A f >= 1/2 on C - k^(2^j0)", "1/2", c.half_lower ? "every point" : "some point below", c.half_lower);
    check(r, "translates of C pairwise disjoint", "empty intersections", c.disjoint ? "empty" : "overlap", c.disjoint);
    check(r, "k^(2^l) - k^(2^m) outside B - B", "no hit", c.differences_outside ? "no hit" : "hit",
          c.differences_outside);
    const auto bound = PowerValue::monomial(Rational(static_cast<unsigned long>(J.size() * in.B.size())), Rational(1, 4),
                                            Exponent::from(p));
    check(r, "||sup_j A_j f||_(p,inf)^p >= |J| ||f||_p^p / 4^p", bound.expression(),
          res.report.weak_p.front().expression(), c.weak_bound);
    json rows = json::array();
    for (const auto& lc : res.report.per_t)
        rows.push_back({{"t", lc.t}, {"peak", to_string(lc.peak)}, {"measure_attaining", to_string(lc.measure_attaining)}});
    r.csv["sumset_levels.csv"] = table_csv(rows);
}

void khintchine(RunReport& r, json& cfg) {
    allow_only(cfg, r.experiment, {"J", "p", "growth", "l1_probe", "weakbound"});
    const auto J = levels_of(cfg, "J");
    const Rational p = rational_of(cfg, "p");
    cfg["p"] = to_string(p);
    const auto lo = kh::khintchine_lower(J, p);
    r.results = {{"J", J},
                 {"p", to_string(p)},
                 {"certified_measure", to_json(lo.certified_measure)},
                 {"measure_at_least_1", to_json(lo.measure_at_least_1)},
                 {"weak_p", to_json(lo.weak_p)},
                 {"g_strong_p", to_json(lo.g_strong_p)},
                 {"ratio", to_json(lo.ratio)},
                 {"claimed", to_json(lo.claimed)},
                 {"profile_cells", lo.profile_u.cells()}};
    check(r, "max_j B_j g >= 1 on [2^j, 2^(j+1)) in e^y", "1", lo.certificate_ok ? ">= 1" : "< 1 somewhere",
          lo.certificate_ok);
    const Interval target = Interval::point(Rational(static_cast<unsigned long>(J.size()))) * ln2_interval();
    const Rational tol = pow(Rational(1, 10), 25);
    const bool close = (lo.certified_measure - target).hi().compare(tol) < 0 &&
                       (target - lo.certified_measure).hi().compare(tol) < 0;
    check(r, "certified measure = |J| ln 2 within 1e-25", target.to_string(), lo.certified_measure.to_string(), close);
    check(r, "ratio >= 2^(-1-1/p) (ln 2)^(1/p) |J|^(1/p)", lo.claimed.to_string(), lo.ratio.to_string(), lo.holds);

    if (cfg.contains("growth")) {
        const json& g = cfg.at("growth");
        const auto prof = kh::growth_divergence(string_of(g, "kind"), count_of(g, "horizon"));
        r.results["growth"] = {{"kind", prof.kind}, {"weak_c", to_string(prof.weak_c)}, {"probed", prof.probed.size()}};
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < prof.h.size(); ++i)
            rows.push_back({std::to_string(i + 1), prof.h[i].get_str(), to_string(prof.c[i])});
        r.csv["khintchine_growth.csv"] = serialize::csv({"N", "h", "c"}, rows);
        check(r, "sup_N B_N g >= c_n at every probe", "c_n", prof.probes_ok ? "met" : "missed", prof.probes_ok);
    }
    if (cfg.contains("weakbound")) {
        std::vector<Rational> h;
        for (const auto& x : need(cfg.at("weakbound"), "h")) h.push_back(serialize::rational_from(x));
        const auto wb = kh::weakbound_check(h);
        r.results["weakbound"] = {{"d", to_string(wb.d)},
                                  {"K", wb.K ? to_string(*wb.K) : "none"},
                                  {"degenerate", wb.degenerate}};
        check(r, "h_n <= e K n^d", "e K n^d", wb.holds ? "all n" : "n = " + std::to_string(wb.first_failure), wb.holds);
    }
    if (cfg.contains("l1_probe")) {
        // open question harness: no assertion
        const json& q = cfg.at("l1_probe");
        const Rational x = rational_of(q, "x");
        const auto f = measure::StepFunction::indicator(measure::Domain::circle(1), 0, Rational(1, 2));
        std::vector<std::vector<std::string>> rows;
        for (auto N : counts_of(q, "N")) {
            const Rational avg = kh::khintchine_sum(f, x, N) / Rational(BigInt(std::to_string(N)));
            rows.push_back({std::to_string(N), to_string(avg)});
        }
        r.csv["khintchine_l1_probe.csv"] = serialize::csv({"N", "average"}, rows);
    }
}

kh::SemigroupSample sample_of(const json& s) {
    for (const auto& [k, v] : s.items())
        if (k != "generators" && k != "elements" && k != "N_max" && k != "include_one")
            throw UsageError("unknown key 'samples." + k + "'");
    const auto N = count_of(s, "N_max");
    if (s.contains("elements")) return kh::semigroup_from_elements(counts_of(s, "elements"), N);
    return kh::semigroup_enumerate(counts_of(s, "generators"), N, bool_of(s, "include_one", false));
}

void semigroup(RunReport& r, json& cfg) {
    allow_only(cfg, r.experiment,
               {"samples", "generators", "elements", "N_max", "include_one", "folner", "lattice", "expect"});
    std::vector<kh::SemigroupSample> samples;
    if (cfg.contains("samples")) {
        for (const auto& s : need(cfg, "samples")) samples.push_back(sample_of(s));
    } else {
        json one;
        for (const char* k : {"generators", "elements", "N_max", "include_one"})
            if (cfg.contains(k)) one[k] = cfg.at(k);
        samples.push_back(sample_of(one));
    }
    if (samples.empty()) throw UsageError("key 'samples' is empty");
    const auto rep = kh::dichotomy_report(samples);

    json sj = json::array();
    std::vector<std::vector<std::string>> count_rows;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        sj.push_back({{"generators", s.generators},
                      {"N_max", s.N_max},
                      {"size", s.elements.size()},
                      {"prime_support", s.prime_support},
                      {"lattice_dim", s.lattice_dim}});
        for (std::size_t g = 0; g < s.curve.N.size(); ++g) {
            std::vector<std::string> row{std::to_string(i), std::to_string(s.curve.N[g]), std::to_string(s.curve.count[g])};
            for (const auto& k : s.curve.normalized) row.push_back(std::to_string(k[g]));
            count_rows.push_back(std::move(row));
        }
    }
    std::size_t kmax = 0;
    for (const auto& s : samples) kmax = std::max<std::size_t>(kmax, s.curve.normalized.size());
    std::vector<std::string> header{"sample", "N", "count"};
    for (std::size_t k = 1; k <= kmax; ++k) header.push_back("count_over_logN_pow_" + std::to_string(k));
    for (auto& row : count_rows) row.resize(header.size());
    r.csv["semigroup_counts.csv"] = serialize::csv(header, count_rows);
    r.results = {{"samples", sj}, {"verdict", rep.verdict}, {"horizons", rep.horizons}, {"support_sizes", rep.support_sizes}};
    if (rep.growth) r.results["growth_weak_c"] = to_string(rep.growth->weak_c);

    std::vector<kh::FolnerRow> folner = rep.folner;
    if (cfg.contains("folner")) {
        const json& f = cfg.at("folner");
        const auto& last = samples.back();
        folner = kh::folner_check(last, count_of(f, "x"), counts_of(f, "Ns"), bool_of(f, "truncated", false));
    }
    if (!folner.empty()) {
        std::vector<std::vector<std::string>> rows;
        bool monotone = true;
        for (std::size_t i = 0; i < folner.size(); ++i) {
            rows.push_back({std::to_string(folner[i].N), std::to_string(folner[i].size), to_string(folner[i].shift_ratio),
                            to_string(folner[i].difference_ratio)});
            if (i > 0 && folner[i].shift_ratio > folner[i - 1].shift_ratio) monotone = false;
        }
        r.csv["semigroup_folner.csv"] = serialize::csv({"N", "size", "shift_ratio", "difference_ratio"}, rows);
        if (rep.verdict == "convergence side")
            check(r, "Folner shift ratio nonincreasing over the N grid", "nonincreasing", monotone ? "nonincreasing" : "increase",
                  monotone);
    }
    const json expect = cfg.value("expect", json::object());
    for (const auto& [k, v] : expect.items())
        if (k != "count_at" && k != "count" && k != "verdict" && k != "residual_bound")
            throw UsageError("unknown key 'expect." + k + "'");
    if (cfg.contains("lattice")) {
        const json& l = cfg.at("lattice");
        const auto primes = counts_of(l, "primes");
        double worst = 0;
        std::vector<std::vector<std::string>> rows;
        for (const auto& yj : need(l, "y")) {
            const Rational y = serialize::rational_from(yj);
            const auto lc = kh::lattice_count(primes, y);
            worst = std::max(worst, lc.normalized_residual);
            rows.push_back({to_string(y), std::to_string(lc.L), std::to_string(lc.asymptote), std::to_string(lc.residual),
                            std::to_string(lc.normalized_residual)});
        }
        r.csv["semigroup_lattice.csv"] = serialize::csv({"y", "L", "asymptote", "residual", "normalized_residual"}, rows);
        r.results["lattice_max_normalized_residual"] = worst;
        if (expect.contains("residual_bound")) {
            const double b = to_double(serialize::rational_from(expect.at("residual_bound")));
            check(r, "residual / y^(d-1) <= bound", std::to_string(b), std::to_string(worst), worst <= b);
        }
    }
    if (expect.contains("count")) {
        const auto N = count_from(need(expect, "count_at"), "expect.count_at");
        const auto want = count_from(expect.at("count"), "expect.count");
        const auto got = samples.front().count_upto(N);
        check(r, "|S_N| at N = " + std::to_string(N), std::to_string(want), std::to_string(got), got == want);
    }
    if (expect.contains("verdict"))
        check(r, "dichotomy verdict", expect.at("verdict").get<std::string>(), rep.verdict,
              expect.at("verdict") == rep.verdict);
}

void audit(RunReport& r, json& cfg) {
    allow_only(cfg, r.experiment, {"instances", "levels", "max_maps", "pairs"});
    const auto instances = count_of(cfg, "instances", 100);
    const auto levels = count_of(cfg, "levels", 16);
    const auto max_maps = count_of(cfg, "max_maps", 64);
    const auto seed = count_of(cfg, "seed", 7);
    if (levels == 0 || levels > 16) throw UsageError("key 'levels' must be in 1..16");
    cfg["instances"] = instances;
    cfg["levels"] = levels;
    cfg["max_maps"] = max_maps;
    cfg["seed"] = seed;
    std::vector<std::pair<Rational, Rational>> pairs;
    if (cfg.contains("pairs")) {
        for (const auto& pr : cfg.at("pairs")) {
            if (!pr.is_array() || pr.size() != 2) throw UsageError("key 'pairs' takes [p, r] entries");
            pairs.emplace_back(serialize::rational_from(pr[0]), serialize::rational_from(pr[1]));
        }
    } else {
        pairs = {{2, Rational(3, 2)}, {3, 2}};
    }
    json pj = json::array();
    for (const auto& [p, rr] : pairs) pj.push_back({to_string(p), to_string(rr)});
    cfg["pairs"] = pj;

    std::mt19937_64 rng(seed);
    std::size_t fa1_bad = 0;
    std::vector<std::size_t> fap_bad(pairs.size(), 0);
    double fa1_worst = 0;
    std::vector<double> fap_worst(pairs.size(), 0);
    std::vector<std::vector<std::string>> rows;
    for (std::uint64_t i = 0; i < instances; ++i) {
        const std::uint64_t s = rng();
        const std::size_t lv = 1 + static_cast<std::size_t>(rng() % levels);
        const auto inst = dynsys::random_instance(s, lv, max_maps);
        std::vector<std::string> row{std::to_string(i), std::to_string(s), std::to_string(lv)};
        try {
            const auto a = dynsys::audit_fa1(inst.family, inst.f, inst.w);
            fa1_worst = std::max(fa1_worst, a.ratio);
            if (!a.holds) ++fa1_bad;
            row.push_back(std::to_string(a.ratio));
        } catch (const BoundViolation&) {
            ++fa1_bad;
            row.push_back("violation");
        }
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            try {
                const auto b = dynsys::audit_fap(inst.family, inst.f, inst.w, pairs[k].first, pairs[k].second);
                fap_worst[k] = std::max(fap_worst[k], b.ratio);
                if (!b.holds) ++fap_bad[k];
                row.push_back(std::to_string(b.ratio));
            } catch (const BoundViolation&) {
                ++fap_bad[k];
                row.push_back("violation");
            }
        }
        rows.push_back(std::move(row));
    }
    std::vector<std::string> header{"instance", "seed", "levels", "fa1_ratio"};
    for (const auto& [p, rr] : pairs) header.push_back("fap_ratio_p" + to_string(p) + "_r" + to_string(rr));
    r.csv["audit.csv"] = serialize::csv(header, rows);
    r.results = {{"instances", instances}, {"fa1_worst_ratio", fa1_worst}, {"fap_worst_ratio", fap_worst}};
    check(r, "fa1 violations", "0", std::to_string(fa1_bad), fa1_bad == 0);
    for (std::size_t k = 0; k < pairs.size(); ++k)
        check(r, "fap violations at p = " + to_string(pairs[k].first) + ", r = " + to_string(pairs[k].second), "0",
              std::to_string(fap_bad[k]), fap_bad[k] == 0);
}

cs::ConstructionPlan rebuild(const json& inputs) {
    const std::string exp = string_of(inputs, "experiment");
    if (exp == "ubl1")
        return cs::build_ubL1(weights_of(need(inputs, "weights"), "weights"), count_of(inputs, "M"),
                              cs::TimeSequence::parse(string_of(inputs, "sequence")), count_of(inputs, "n0", 0));
    if (exp == "ublp")
        return cs::build_ubLp(levels_of(inputs, "J"), rational_of(inputs, "p"), count_of(inputs, "n0", 0),
                              cs::TimeSequence::parse(string_of(inputs, "sequence")));
    if (exp == "infection")
        return cs::build_infection(count_of(inputs, "k"), weights_of(need(inputs, "weights"), "weights"),
                                   count_of(inputs, "y"));
    throw UsageError("plan inputs name an unknown experiment '" + exp + "'");
}

}  // namespace

bool RunReport::passed() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

json RunReport::payload() const {
    json as = json::array();
    for (const auto& a : assertions)
        as.push_back({{"name", a.name}, {"bound", a.bound}, {"achieved", a.achieved}, {"pass", a.pass}});
    return {{"experiment", experiment}, {"config", config}, {"results", results}, {"assertions", as}, {"passed", passed()}};
}

json RunReport::to_json() const {
    json out = payload();
    out["timing"] = {{"seconds", seconds}};
    return out;
}

const std::vector<std::string>& experiments() {
    static const std::vector<std::string> names{"weights-analyze", "ubl1",  "ublp",  "infection", "sumset",
                                                "khintchine",      "semigroup", "audit", "replay"};
    return names;
}

RunReport run(const std::string& experiment, json config, std::optional<std::uint64_t> seed) {
    if (std::find(experiments().begin(), experiments().end(), experiment) == experiments().end())
        throw UsageError("unknown experiment '" + experiment + "'");
    if (experiment == "replay") return replay(config);
    if (config.contains("experiment") && config.at("experiment") != experiment)
        throw UsageError("config is for experiment '" + config.at("experiment").dump() + "', not " + experiment);
    if (seed) config["seed"] = *seed;
    config["experiment"] = experiment;

    RunReport r;
    r.experiment = experiment;
    const auto t0 = std::chrono::steady_clock::now();
    if (experiment == "weights-analyze") weights_analyze(r, config);
    else if (experiment == "ubl1") ubl1(r, config);
    else if (experiment == "ublp") ublp(r, config);
    else if (experiment == "infection") infection(r, config);
    else if (experiment == "sumset") sumset(r, config);
    else if (experiment == "khintchine") khintchine(r, config);
    else if (experiment == "semigroup") semigroup(r, config);
    else audit(r, config);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.config = config;
    return r;
}

RunReport replay(const json& plan) {
    if (!plan.is_object() || !plan.contains("inputs")) throw UsageError("replay needs a serialized plan with 'inputs'");
    RunReport r;
    r.experiment = "replay";
    r.config = {{"experiment", "replay"}, {"inputs", plan.at("inputs")}};
    const auto t0 = std::chrono::steady_clock::now();
    const json fresh = serialize::to_json(rebuild(plan.at("inputs")));
    for (const char* key : {"name", "p", "system", "f", "claimed_bound", "achieved", "bookkeeping"}) {
        const json stored = plan.value(key, json());
        const bool same = stored == fresh.at(key);
        check(r, std::string("replayed ") + key + " identical", short_dump(stored), short_dump(fresh.at(key)), same);
    }
    r.results = {{"plan", plan.value("name", "")}, {"replay", r.passed() ? "identical" : "replay-failure"}};
    r.plan = fresh;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

void write_outputs(const RunReport& r, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto put = [&](const std::string& name, const std::string& text) {
        const fs::path target = fs::path(dir) / name;
        const fs::path tmp = fs::path(dir) / ("." + name + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary);
            out << text;
            if (!out) throw std::runtime_error("cannot write " + tmp.string());
        }
        fs::rename(tmp, target);
    };
    put(r.experiment + ".json", r.to_json().dump(2) + "\n");
    for (const auto& [name, text] : r.csv) put(name, text);
    if (r.plan) put(r.experiment + "_plan.json", r.plan->dump(2) + "\n");
}

}  // namespace divergia::cli
