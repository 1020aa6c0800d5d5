#include "renorm/circle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "renorm/error.hpp"

namespace renorm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPeriodicTol = 1e-13;

// a/b < c/d for positive denominators
bool less_frac(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
    return static_cast<__int128>(a) * d < static_cast<__int128>(c) * b;
}

std::int64_t gcd64(std::int64_t a, std::int64_t b) {
    while (b != 0) {
        const auto t = a % b;
        a = b;
        b = t;
    }
    return a < 0 ? -a : a;
}

}  // namespace

cplx blaschke_eval(double tau, cplx z) {
    const cplx den = 1.0 - 3.0 * z;
    if (std::abs(den) < 1e-300) throw numerical_error("circle", "Q_tau pole at z = 1/3");
    return std::polar(1.0, 2 * kPi * tau) * z * z * (z - 3.0) / den;
}

CircleMapLift blaschke_lift(double tau) {
    CircleMapLift f;
    f.F = [tau](double x) {
        const double t = 2 * kPi * x;
        return x + tau + std::atan2(-std::sin(t), 3.0 - std::cos(t)) / kPi;
    };
    f.dF = [](double x) {
        const double c = std::cos(2 * kPi * x);
        return 6.0 * (1.0 - c) / (5.0 - 3.0 * c);
    };
    return f;
}

CircleMapLift rotation_lift(double theta) {
    CircleMapLift f;
    f.F = [theta](double x) { return x + theta; };
    f.dF = [](double) { return 1.0; };
    return f;
}

namespace {

// Iterates F from 0 keeping integer and fractional parts apart. `visit` gets
// (k, floor(F^k(0)), frac) and returns false to stop.
template <class Visit>
std::int64_t walk_orbit(const CircleMapLift& f, std::int64_t budget, Visit&& visit) {
    std::int64_t whole = 0;
    double frac = 0.0;
    for (std::int64_t k = 1; k <= budget; ++k) {
        const double y = f.F(frac);
        const double fl = std::floor(y);
        whole += static_cast<std::int64_t>(fl);
        frac = y - fl;
        if (!visit(k, whole, frac)) return k;
    }
    return budget;
}

struct Bracket {
    // rho in [ln/ld, un/ud]
    std::int64_t ln = 0, ld = 1, un = 1, ud = 1;
    bool have = false;

    bool update(std::int64_t k, std::int64_t whole) {
        bool changed = false;
        const auto lo = std::max<std::int64_t>(whole, 0);
        if (!have || less_frac(ln, ld, lo, k)) {
            ln = lo;
            ld = k;
            changed = true;
        }
        const auto hi = whole + 1;
        if (!have || less_frac(hi, k, un, ud)) {
            if (less_frac(hi, k, 1, 1)) {
                un = hi;
                ud = k;
                changed = true;
            }
        }
        have = true;
        return changed;
    }

    double lower() const { return static_cast<double>(ln) / static_cast<double>(ld); }
    double upper() const { return static_cast<double>(un) / static_cast<double>(ud); }
};

RotationNumber rational_result(std::int64_t p, std::int64_t k) {
    RotationNumber r;
    const auto g = gcd64(p, k);
    p /= g;
    k /= g;
    r.value = static_cast<double>(p) / static_cast<double>(k);
    r.lower = r.upper = r.value;
    r.rational = true;
    r.period = k;
    const auto pm = ((p % k) + k) % k;
    r.cf = cf_from_rational(pm, k);
    return r;
}

}  // namespace

RotationNumber rotation_number(const CircleMapLift& f, int depth, std::int64_t budget,
                               double value_tol) {
    if (budget < 1) throw config_error("circle", "rotation_number budget must be positive");
    Bracket br;
    std::vector<std::int64_t> terms;
    std::optional<std::pair<std::int64_t, std::int64_t>> periodic;
    const auto used = walk_orbit(f, budget, [&](std::int64_t k, std::int64_t whole, double frac) {
        if (frac < kPeriodicTol) {
            periodic = {whole, k};
            return false;
        }
        if (1.0 - frac < kPeriodicTol) {
            periodic = {whole + 1, k};
            return false;
        }
        if (br.update(k, whole)) {
            terms = common_terms(br.ln, br.ld, br.un, br.ud, depth);
            if (static_cast<int>(terms.size()) >= depth && br.upper() - br.lower() < value_tol)
                return false;
        }
        return true;
    });
    if (periodic) {
        auto r = rational_result(periodic->first, periodic->second);
        r.iterates = used;
        return r;
    }
    RotationNumber r;
    r.lower = br.lower();
    r.upper = br.upper();
    r.value = 0.5 * (r.lower + r.upper);
    r.cf.terms = terms;
    r.partial = static_cast<int>(terms.size()) < depth;
    r.iterates = used;
    return r;
}

TuneResult tune_tau(double theta, double tol, std::int64_t budget) {
    if (!(theta > 0.0 && theta < 1.0)) throw config_error("circle", "tune_tau needs 0 < theta < 1");
    if (!(tol > 0.0)) throw config_error("circle", "tune_tau needs tol > 0");
    double lo = 0.0, hi = 1.0;
    std::optional<double> inside;
    int it = 0;
    for (; it < 60 && !inside; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const auto lift = blaschke_lift(mid);
        Bracket br;
        int side = 0;
        walk_orbit(lift, budget, [&](std::int64_t k, std::int64_t whole, double frac) {
            if (frac < kPeriodicTol || 1.0 - frac < kPeriodicTol) {
                const double p = static_cast<double>(frac < 0.5 ? whole : whole + 1) / static_cast<double>(k);
                // a mode-locked tau with rho = theta is a hit
                if (std::abs(p - theta) > tol) side = p < theta ? -1 : 1;
                return false;
            }
            br.update(k, whole);
            if (br.upper() < theta) side = -1;
            if (br.lower() > theta) side = 1;
            if (side != 0) return false;
            return br.upper() - br.lower() >= 0.1 * tol;
        });
        if (side < 0)
            lo = mid;
        else if (side > 0)
            hi = mid;
        else
            inside = mid;
    }
    TuneResult out;
    out.tau = inside.value_or(0.5 * (lo + hi));
    out.iterations = it;
    out.rho = rotation_number(blaschke_lift(out.tau), 20, budget, 0.1 * tol);
    out.residual = std::max(std::abs(theta - out.rho.lower), std::abs(out.rho.upper - theta));
    out.mode_locked = out.rho.rational;
    if (!out.mode_locked && out.rho.lower <= theta && theta <= out.rho.upper) {
        // a rational theta is only ever bracketed, never resolved, inside its locking interval
        const auto cf = cf_from_real(theta, 40);
        out.mode_locked = cf.infinite && !cf.truncated;
    }
    if (!out.mode_locked && out.residual >= tol) {
        char msg[160];
        std::snprintf(msg, sizeof msg, "tune_tau did not reach tol %.3g (residual %.3g, rho bracket width %.3g)", tol,
                      out.residual, out.rho.upper - out.rho.lower);
        // a bracket wider than tol means the orbit budget, not the bisection, is the limit
        if (out.rho.upper - out.rho.lower >= tol) throw budget_error("circle", msg);
        throw numerical_error("circle", msg);
    }
    return out;
}

double PairMap::operator()(double x) const {
    if (generic) return (*generic)(x);
    // integer and fractional parts kept apart so long orbits keep full precision
    double r = S.inverse(x);
    double m = std::floor(r);
    r -= m;
    const auto& F = *base;
    for (std::int64_t i = 0; i < k; ++i) {
        r = F(r);
        const double j = std::floor(r);
        m += j;
        r -= j;
    }
    return S((m - static_cast<double>(p)) + r);
}

bool PairMap::same_frame(const PairMap& o) const {
    return !generic && !o.generic && base == o.base && S.a == o.S.a && S.b == o.S.b;
}

PairMap compose(const PairMap& outer, const PairMap& inner) {
    if (outer.same_frame(inner)) {
        PairMap m = outer;
        m.k = outer.k + inner.k;
        m.p = outer.p + inner.p;
        return m;
    }
    PairMap m;
    m.generic = std::make_shared<const std::function<double(double)>>(
        [outer, inner](double x) { return outer(inner(x)); });
    return m;
}

PairMap power(const PairMap& m, std::int64_t r) {
    if (r < 0) throw config_error("circle", "negative power of a pair map");
    if (!m.generic) {
        PairMap out = m;
        out.k = m.k * r;
        out.p = m.p * r;
        return out;
    }
    PairMap out;
    out.generic = std::make_shared<const std::function<double(double)>>([m, r](double x) {
        for (std::int64_t i = 0; i < r; ++i) x = m(x);
        return x;
    });
    return out;
}

PairMap rescale(const PairMap& m, double lambda) {
    if (!m.generic) {
        PairMap out = m;
        out.S = Affine{lambda, 0.0}.after(m.S);
        return out;
    }
    PairMap out;
    out.generic = std::make_shared<const std::function<double(double)>>(
        [m, lambda](double x) { return lambda * m(x / lambda); });
    return out;
}

CommutingPair CommutingPair::make(PairMap eta, PairMap xi) {
    CommutingPair c;
    c.eta = std::move(eta);
    c.xi = std::move(xi);
    c.eta0 = c.eta(0.0);
    c.xi0 = c.xi(0.0);
    return c;
}

double CommutingPair::commutation_defect(int samples) const {
    // both programs are defined on all of R; test on I_xi u I_eta
    const double lo = std::min(eta0, 0.0), hi = std::max(xi0, 0.0);
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double x = lo + (hi - lo) * (i + 0.5) / samples;
        worst = std::max(worst, std::abs(eta(xi(x)) - xi(eta(x))));
    }
    return worst / std::abs(xi0);
}

void CommutingPair::check_invariants(double tol) const {
    if (!(xi0 > 0.0)) throw numerical_error("circle", "pair has xi(0) <= 0");
    if (!(eta0 < 0.0)) throw numerical_error("circle", "pair has eta(0) >= 0");
    const double d = commutation_defect();
    if (!(d < tol))
        throw numerical_error("circle", "commutation defect " + std::to_string(d));
    const double v = xi(eta0);
    if (v < -tol * xi0 || v > xi0 * (1 + tol))
        throw numerical_error("circle", "xi(eta(0)) outside I_eta");
}

CommutingPair make_pair(std::function<double(double)> eta, std::function<double(double)> xi) {
    PairMap e, x;
    e.generic = std::make_shared<const std::function<double(double)>>(std::move(eta));
    x.generic = std::make_shared<const std::function<double(double)>>(std::move(xi));
    return CommutingPair::make(std::move(e), std::move(x));
}

CommutingPair pre_renormalize(const CircleMapLift& f, const Convergents& c, int n) {
    if (n < 0 || n + 1 > c.depth())
        throw config_error("circle", "pre_renormalize needs convergents to depth n+1");
    auto base = std::make_shared<const std::function<double(double)>>(f.F);
    const Affine S = (n % 2 == 0) ? Affine{1.0, 0.0} : Affine{-1.0, 0.0};
    PairMap eta{base, nullptr, c.q[n + 1], c.p[n + 1], S};
    PairMap xi{base, nullptr, c.q[n], c.p[n], S};
    return CommutingPair::make(std::move(eta), std::move(xi));
}

CommutingPair pre_renormalize(const CircleMapLift& f, int n, std::int64_t budget) {
    const auto rho = rotation_number(f, n + 2, budget);
    if (rho.rational)
        throw numerical_error("circle",
                              "rational rotation number, locked at q = " + std::to_string(rho.period));
    if (static_cast<int>(rho.cf.terms.size()) < n + 1)
        throw budget_error("circle", "budget exhausted before " + std::to_string(n + 1) +
                                         " continued-fraction terms");
    return pre_renormalize(f, convergents(rho.cf, n + 1), n);
}

Height height(const CommutingPair& pair, std::int64_t cap) {
    Height h;
    const double s0 = pair.eta(0.0);
    const double s1 = pair.eta(pair.xi0) - pair.xi0;
    if (s0 * s1 <= 0.0) {
        h.diagnostic = "eta has a fixed point in I_eta";
        return h;
    }
    double x = pair.xi0;
    for (std::int64_t r = 0; r < cap; ++r) {
        const double y = pair.eta(x);
        if ((x >= 0.0 && y <= 0.0) || (x <= 0.0 && y >= 0.0)) {
            h.value = r;
            return h;
        }
        if (std::abs(y) >= std::abs(x)) {
            h.diagnostic = "eta orbit does not approach 0";
            return h;
        }
        x = y;
    }
    h.diagnostic = "iteration cap exceeded";
    return h;
}

CommutingPair renormalize_pair(const CommutingPair& pair) {
    const auto h = height(pair);
    if (h.infinite()) throw numerical_error("circle", "infinite height: " + h.diagnostic);
    const double lambda = -1.0 / std::abs(pair.xi0);
    auto new_eta = rescale(compose(power(pair.eta, *h.value), pair.xi), lambda);
    auto new_xi = rescale(pair.eta, lambda);
    return CommutingPair::make(std::move(new_eta), std::move(new_xi));
}

double Arc::mod_start() const { return start - std::floor(start); }

Partition dynamical_partition(const CircleMapLift& f, double point, const Convergents& c, int n) {
    if (n < 0 || n + 1 > c.depth())
        throw config_error("circle", "dynamical_partition needs convergents to depth n+1");
    const auto qn = c.q[n], qn1 = c.q[n + 1];
    const auto pn = c.p[n], pn1 = c.p[n + 1];
    const auto len = static_cast<std::size_t>(qn + qn1);
    std::vector<std::int64_t> whole(len);
    std::vector<double> frac(len);
    {
        const double fl = std::floor(point);
        whole[0] = static_cast<std::int64_t>(fl);
        frac[0] = point - fl;
        for (std::size_t i = 1; i < len; ++i) {
            const double y = f.F(frac[i - 1]);
            const double g = std::floor(y);
            whole[i] = whole[i - 1] + static_cast<std::int64_t>(g);
            frac[i] = y - g;
        }
    }
    // arc from orbit point i to orbit point j shifted back by `shift` turns
    auto arc = [&](std::size_t i, std::size_t j, std::int64_t shift) {
        const double diff =
            static_cast<double>(whole[j] - shift - whole[i]) + (frac[j] - frac[i]);
        Arc a;
        a.start = diff >= 0 ? frac[i] : frac[i] + diff;
        a.length = std::abs(diff);
        return a;
    };
    Partition part;
    part.n = n;
    part.arcs.reserve(len);
    for (std::int64_t i = 0; i < qn1; ++i)
        part.arcs.push_back(arc(static_cast<std::size_t>(i), static_cast<std::size_t>(i + qn), pn));
    for (std::int64_t i = 0; i < qn; ++i)
        part.arcs.push_back(arc(static_cast<std::size_t>(i), static_cast<std::size_t>(i + qn1), pn1));
    std::sort(part.arcs.begin(), part.arcs.end(),
              [](const Arc& a, const Arc& b) { return a.mod_start() < b.mod_start(); });
    part.total_length = 0;
    part.max_length = 0;
    part.min_length = 1;
    for (const auto& a : part.arcs) {
        part.total_length += a.length;
        part.max_length = std::max(part.max_length, a.length);
        part.min_length = std::min(part.min_length, a.length);
    }
    part.disjoint = part.min_length > 0;
    for (std::size_t i = 0; i < part.arcs.size() && part.disjoint; ++i) {
        const auto& a = part.arcs[i];
        const double next = (i + 1 < part.arcs.size()) ? part.arcs[i + 1].mod_start()
                                                       : part.arcs[0].mod_start() + 1.0;
        if (std::abs(a.mod_start() + a.length - next) > 1e-10) part.disjoint = false;
    }
    return part;
}

Partition dynamical_partition(const CircleMapLift& f, double point, int n, std::int64_t budget) {
    const auto rho = rotation_number(f, n + 2, budget);
    if (rho.rational) throw numerical_error("circle", "rational rotation number: no partition");
    if (static_cast<int>(rho.cf.terms.size()) < n + 1)
        throw budget_error("circle", "budget exhausted before partition depth");
    return dynamical_partition(f, point, convergents(rho.cf, n + 1), n);
}

bool refines(const Partition& fine, const Partition& coarse, double tol) {
    if (coarse.arcs.empty()) return false;
    std::vector<double> starts;
    starts.reserve(coarse.arcs.size());
    for (const auto& a : coarse.arcs) starts.push_back(a.mod_start());
    for (const auto& a : fine.arcs) {
        double s = a.mod_start();
        auto it = std::upper_bound(starts.begin(), starts.end(), s + tol);
        std::size_t idx;
        if (it == starts.begin()) {
            idx = starts.size() - 1;  // wraps around from the last coarse arc
            s += 1.0;
        } else {
            idx = static_cast<std::size_t>(it - starts.begin()) - 1;
        }
        const double cs = starts[idx];
        const double ce = cs + coarse.arcs[idx].length;
        if (s < cs - tol || s + a.length > ce + tol) return false;
    }
    return true;
}

}  // namespace renorm
