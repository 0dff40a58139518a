#include "divergia/measure.hpp"

#include <algorithm>
#include <map>

#include "divergia/errors.hpp"

namespace divergia::measure {

Domain Domain::circle(const Rational& circumference) {
    if (sgn(circumference) <= 0) throw DomainError("circle circumference must be positive");
    return Domain{Kind::Circle, 0, circumference};
}

Domain Domain::window(const Rational& left, const Rational& right) {
    if (right <= left) throw DomainError("window needs right > left");
    return Domain{Kind::Window, left, right};
}

std::string Domain::describe() const {
    if (is_circle()) return "circle(" + to_string(right) + ")";
    return "window[" + to_string(left) + ", " + to_string(right) + ")";
}

namespace {

// Contiguous pieces over [left, right), merged and laid out canonically.
void canonicalize(const Domain& d, std::vector<Piece> linear, std::vector<Rational>& bp, std::vector<Rational>& vals) {
    std::vector<Piece> merged;
    for (auto& p : linear) {
        if (p.end <= p.start) continue;
        if (!merged.empty() && merged.back().value == p.value) {
            merged.back().end = p.end;
        } else {
            merged.push_back(std::move(p));
        }
    }
    bp.clear();
    vals.clear();
    if (merged.empty()) {
        vals.push_back(0);
        return;
    }
    if (!d.is_circle()) {
        for (std::size_t i = 0; i < merged.size(); ++i) {
            if (i > 0) bp.push_back(merged[i].start);
            vals.push_back(merged[i].value);
        }
        return;
    }
    if (merged.size() == 1) {
        vals.push_back(merged.front().value);
        return;
    }
    const bool wrap_merge = merged.front().value == merged.back().value;
    for (std::size_t i = wrap_merge ? 1 : 0; i < merged.size(); ++i) {
        bp.push_back(merged[i].start);
        vals.push_back(merged[i].value);
    }
}

// Sweep that adds overlapping pieces (already inside [left, right)).
std::vector<Piece> sweep(const Domain& d, const std::vector<Piece>& clipped) {
    std::map<Rational, Rational> delta;
    for (const auto& p : clipped) {
        if (p.end <= p.start || sgn(p.value) == 0) continue;
        delta[p.start] += p.value;
        delta[p.end] -= p.value;
    }
    std::vector<Piece> out;
    Rational cur = 0;
    Rational pos = d.left;
    for (const auto& [x, dv] : delta) {
        if (x > pos) out.push_back(Piece{pos, x, cur});
        pos = std::max(pos, x);
        cur += dv;
    }
    if (pos < d.right) out.push_back(Piece{pos, d.right, cur});
    for (auto& p : out)
        if (sgn(p.value) < 0) throw InvariantError("negative value in piece sweep");
    return out;
}

void clip_into(const Domain& d, const Piece& p, std::vector<Piece>& out) {
    if (p.end <= p.start) return;
    if (d.is_circle()) {
        const Rational& M = d.right;
        const Rational len = p.end - p.start;
        if (len >= M) {
            Rational copies(floor(len / M));
            out.push_back(Piece{0, M, p.value * copies});
            Rational rest = len - copies * M;
            if (sgn(rest) > 0) clip_into(d, Piece{p.start, p.start + rest, p.value}, out);
            return;
        }
        Rational a = mod(p.start, M);
        Rational b = a + len;
        if (b <= M) {
            out.push_back(Piece{a, b, p.value});
        } else {
            out.push_back(Piece{a, M, p.value});
            out.push_back(Piece{0, b - M, p.value});
        }
    } else {
        Rational a = std::max(p.start, d.left);
        Rational b = std::min(p.end, d.right);
        if (a < b) out.push_back(Piece{a, b, p.value});
    }
}

template <class Op>
StepFunction combine(const StepFunction& f, const StepFunction& g, Op op) {
    std::vector<Piece> out;
    for (auto& o : overlay(f, g)) {
        Rational v = op(o.a, o.b);
        if (sgn(v) < 0) throw DomainError("operation would produce a negative value");
        out.push_back(Piece{std::move(o.start), std::move(o.end), std::move(v)});
    }
    return StepFunction::from_pieces(f.domain(), out);
}

}  // namespace

StepFunction StepFunction::constant(const Domain& d, const Rational& c) {
    if (sgn(c) < 0) throw DomainError("step functions are nonnegative");
    StepFunction f;
    f.domain_ = d;
    f.values_ = {c};
    return f;
}

StepFunction StepFunction::indicator(const Domain& d, const Rational& lo, const Rational& hi, const Rational& value) {
    if (hi < lo) throw DomainError("indicator needs lo <= hi");
    if (d.is_circle() && hi - lo > d.length()) throw DomainError("indicator longer than the circle");
    return from_pieces(d, {Piece{lo, hi, value}});
}

StepFunction StepFunction::from_pieces(const Domain& d, const std::vector<Piece>& pieces) {
    std::vector<Piece> clipped;
    for (const auto& p : pieces) {
        if (sgn(p.value) < 0) throw DomainError("step functions are nonnegative");
        clip_into(d, p, clipped);
    }
    StepFunction f;
    f.domain_ = d;
    canonicalize(d, sweep(d, clipped), f.breakpoints_, f.values_);
    return f;
}

StepFunction StepFunction::from_layout(const Domain& d, std::vector<Rational> breakpoints, std::vector<Rational> values) {
    const std::size_t m = breakpoints.size();
    const std::size_t expected = d.is_circle() ? std::max<std::size_t>(m, 1) : m + 1;
    if (values.size() != expected) throw DomainError("wrong number of cell values for the breakpoints");
    for (std::size_t i = 0; i < m; ++i) {
        if (i > 0 && breakpoints[i] <= breakpoints[i - 1]) throw DomainError("breakpoints must increase strictly");
        const bool inside = d.is_circle() ? (sgn(breakpoints[i]) >= 0 && breakpoints[i] < d.right)
                                          : (breakpoints[i] > d.left && breakpoints[i] < d.right);
        if (!inside) throw DomainError("breakpoint outside the domain: " + to_string(breakpoints[i]));
    }
    for (const auto& v : values)
        if (sgn(v) < 0) throw DomainError("step functions are nonnegative");
    StepFunction raw;
    raw.domain_ = d;
    raw.breakpoints_ = std::move(breakpoints);
    raw.values_ = std::move(values);
    StepFunction f;
    f.domain_ = d;
    canonicalize(d, raw.pieces(), f.breakpoints_, f.values_);
    return f;
}

std::vector<Piece> StepFunction::pieces() const {
    std::vector<Piece> out;
    const std::size_t m = breakpoints_.size();
    if (domain_.is_circle()) {
        if (m == 0) return {Piece{0, domain_.right, values_.front()}};
        if (sgn(breakpoints_.front()) > 0) out.push_back(Piece{0, breakpoints_.front(), values_.back()});
        for (std::size_t i = 0; i < m; ++i)
            out.push_back(Piece{breakpoints_[i], i + 1 < m ? breakpoints_[i + 1] : domain_.right, values_[i]});
        return out;
    }
    Rational pos = domain_.left;
    for (std::size_t i = 0; i <= m; ++i) {
        Rational end = i < m ? breakpoints_[i] : domain_.right;
        out.push_back(Piece{pos, end, values_[i]});
        pos = end;
    }
    return out;
}

Rational StepFunction::operator()(const Rational& x) const {
    Rational y = x;
    if (domain_.is_circle()) {
        y = mod(x, domain_.right);
    } else if (x < domain_.left || x >= domain_.right) {
        return 0;
    }
    const std::size_t m = breakpoints_.size();
    if (m == 0) return values_.front();
    // number of breakpoints <= y
    const auto k = static_cast<std::size_t>(std::upper_bound(breakpoints_.begin(), breakpoints_.end(), y) -
                                            breakpoints_.begin());
    if (domain_.is_circle()) return k == 0 ? values_.back() : values_[k - 1];
    return values_[k];
}

Rational StepFunction::integral() const {
    std::vector<Rational> terms;
    for (const auto& p : pieces()) terms.push_back((p.end - p.start) * p.value);
    return pairwise_sum(terms);
}

Rational StepFunction::max_value() const { return *std::max_element(values_.begin(), values_.end()); }

Rational StepFunction::measure_at_least(const Rational& y) const {
    Rational s = 0;
    for (const auto& p : pieces())
        if (p.value >= y) s += p.end - p.start;
    return s;
}

Rational StepFunction::measure_above(const Rational& y) const {
    Rational s = 0;
    for (const auto& p : pieces())
        if (p.value > y) s += p.end - p.start;
    return s;
}

std::vector<Rational> StepFunction::levels() const {
    std::vector<Rational> v = values_;
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

StepFunction StepFunction::map_values(const std::function<Rational(const Rational&)>& fn) const {
    auto ps = pieces();
    for (auto& p : ps) {
        p.value = fn(p.value);
        if (sgn(p.value) < 0) throw DomainError("map_values produced a negative value");
    }
    StepFunction f;
    f.domain_ = domain_;
    canonicalize(domain_, std::move(ps), f.breakpoints_, f.values_);
    return f;
}

StepFunction translate(const StepFunction& f, const Rational& s) {
    std::vector<Piece> moved;
    for (const auto& p : f.pieces())
        if (sgn(p.value) > 0) moved.push_back(Piece{p.start + s, p.end + s, p.value});
    return StepFunction::from_pieces(f.domain(), moved);
}

StepFunction sum_of_shifts(const StepFunction& f, const std::vector<Rational>& shifts, const Rational& coeff) {
    if (sgn(coeff) < 0) throw DomainError("negative coefficient");
    std::vector<Piece> base;
    for (const auto& p : f.pieces())
        if (sgn(p.value) > 0) base.push_back(Piece{p.start, p.end, p.value * coeff});
    std::vector<Piece> all;
    all.reserve(base.size() * shifts.size());
    for (const auto& s : shifts)
        for (const auto& p : base) all.push_back(Piece{p.start - s, p.end - s, p.value});
    return StepFunction::from_pieces(f.domain(), all);
}

std::vector<Overlay> overlay(const StepFunction& f, const StepFunction& g) {
    if (!(f.domain() == g.domain())) throw DomainError("step functions live on different domains");
    const auto pf = f.pieces();
    const auto pg = g.pieces();
    std::vector<Overlay> out;
    std::size_t i = 0, j = 0;
    Rational pos = f.domain().left;
    while (i < pf.size() && j < pg.size()) {
        const Rational end = std::min(pf[i].end, pg[j].end);
        out.push_back(Overlay{pos, end, pf[i].value, pg[j].value});
        pos = end;
        if (pf[i].end == end) ++i;
        if (pg[j].end == end) ++j;
    }
    return out;
}

StepFunction multiply(const StepFunction& f, const StepFunction& g) {
    return combine(f, g, [](const Rational& a, const Rational& b) { return Rational(a * b); });
}

StepFunction pointwise_max(const std::vector<StepFunction>& fs) {
    if (fs.empty()) throw DomainError("pointwise_max of an empty list");
    std::vector<StepFunction> level = fs;
    while (level.size() > 1) {
        std::vector<StepFunction> next;
        for (std::size_t i = 0; i + 1 < level.size(); i += 2)
            next.push_back(combine(level[i], level[i + 1], [](const Rational& a, const Rational& b) { return std::max(a, b); }));
        if (level.size() % 2) next.push_back(level.back());
        level = std::move(next);
    }
    return level.front();
}

StepFunction scale_add(const Rational& a, const StepFunction& f, const Rational& b, const StepFunction& g) {
    return combine(f, g, [&](const Rational& x, const Rational& y) { return Rational(a * x + b * y); });
}

Split threshold_split(const StepFunction& f, const Rational& lo, const Rational& hi) {
    if (lo > hi) throw DomainError("threshold_split needs lo <= hi");
    if (sgn(lo) < 0) throw DomainError("threshold_split needs lo >= 0");
    return Split{
        f.map_values([&](const Rational& v) { return v >= hi ? v : Rational(0); }),
        f.map_values([&](const Rational& v) { return lo < v && v < hi ? v : Rational(0); }),
        f.map_values([&](const Rational& v) { return v <= lo ? v : Rational(0); }),
    };
}

NormReport norms(const StepFunction& f, const Rational& p) {
    if (p < 1) throw DomainError("norms need p >= 1");
    const Exponent e = Exponent::from(p);
    NormReport r;
    r.p = p;
    r.strong_p = PowerValue::zero(e);
    r.weak_p = PowerValue::zero(e);
    std::map<Rational, Rational> mass;  // value -> measure
    for (const auto& piece : f.pieces())
        if (sgn(piece.value) > 0) mass[piece.value] += piece.end - piece.start;
    for (const auto& [v, len] : mass) r.strong_p += PowerValue::monomial(len, v, e);
    Rational tail = 0;  // mu{f >= v}, built from the top level down
    for (auto it = mass.rbegin(); it != mass.rend(); ++it) {
        tail += it->second;
        auto cand = PowerValue::monomial(tail, it->first, e);
        if (r.weak_p.is_zero() || r.weak_p < cand) {
            r.weak_p = cand;
            r.attaining_level = it->first;
        }
    }
    return r;
}

}  // namespace divergia::measure
