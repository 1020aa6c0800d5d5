#include "renorm/cfrac.hpp"

#include <cmath>
#include <string>

#include "renorm/error.hpp"

namespace renorm {

namespace {

constexpr double kTermCap = 1e9;

std::int64_t checked_mul_add(std::int64_t a, std::int64_t x, std::int64_t y) {
    std::int64_t prod = 0;
    std::int64_t sum = 0;
    if (__builtin_mul_overflow(a, x, &prod) || __builtin_add_overflow(prod, y, &sum))
        throw numerical_error("cfrac", "convergent overflows 64-bit integers");
    return sum;
}

}  // namespace

void ContinuedFraction::validate() const {
    for (auto a : terms)
        if (a < 1) throw config_error("cfrac", "continued-fraction term < 1: " + std::to_string(a));
}

double theta_N(int N) {
    if (N < 1) throw config_error("cfrac", "theta_N needs N >= 1");
    const double n = N;
    // (sqrt(N^2+4) - N)/2 rewritten to avoid cancellation
    return 2.0 / (std::sqrt(n * n + 4.0) + n);
}

ContinuedFraction golden_cf(int N, int n) {
    if (N < 1) throw config_error("cfrac", "golden_cf needs N >= 1");
    ContinuedFraction cf;
    cf.terms.assign(static_cast<std::size_t>(n), N);
    return cf;
}

double cf_value(const ContinuedFraction& cf, int depth) {
    if (depth < 1) throw config_error("cfrac", "cf_value depth must be >= 1");
    cf.validate();
    const int n = std::min<int>(depth, static_cast<int>(cf.terms.size()));
    double x = 0.0;
    for (int i = n - 1; i >= 0; --i) x = 1.0 / (static_cast<double>(cf.terms[i]) + x);
    return x;
}

double cf_value(const ContinuedFraction& cf) {
    return cf.terms.empty() ? 0.0 : cf_value(cf, static_cast<int>(cf.terms.size()));
}

Convergents convergents(const ContinuedFraction& cf, int n) {
    cf.validate();
    if (n < 1) throw config_error("cfrac", "convergents need n >= 1");
    if (n > static_cast<int>(cf.terms.size())) {
        if (cf.infinite)
            throw config_error("cfrac", "convergent " + std::to_string(n) +
                                            " requested past the infinity marker");
        throw config_error("cfrac", "only " + std::to_string(cf.terms.size()) +
                                        " terms available for convergent " + std::to_string(n));
    }
    Convergents c;
    c.p = {0, 1};
    c.q = {1, cf.terms[0]};
    for (int i = 2; i <= n; ++i) {
        const auto a = cf.terms[i - 1];
        c.p.push_back(checked_mul_add(a, c.p[i - 1], c.p[i - 2]));
        c.q.push_back(checked_mul_add(a, c.q[i - 1], c.q[i - 2]));
    }
    return c;
}

double gauss_map(double theta) {
    if (theta == 0.0) throw numerical_error("cfrac", "gauss_map at 0 (rational endpoint)");
    const double y = 1.0 / theta;
    return y - std::floor(y);
}

ContinuedFraction cf_from_real(double x, int n) {
    if (!(x > 0.0 && x < 1.0)) throw config_error("cfrac", "cf_from_real needs 0 < x < 1");
    ContinuedFraction cf;
    for (int i = 0; i < n; ++i) {
        if (x == 0.0) {
            cf.infinite = true;
            break;
        }
        const double y = 1.0 / x;
        double a = std::floor(y);
        if (a > kTermCap) {
            cf.infinite = true;
            cf.truncated = true;
            break;
        }
        // a remainder within 1/kTermCap of an integer would spawn a term beyond the cap
        const double r = y - a;
        if (r < 1.0 / kTermCap || r > 1.0 - 1.0 / kTermCap) {
            if (r > 0.5) a += 1.0;
            cf.terms.push_back(static_cast<std::int64_t>(a));
            cf.infinite = true;
            cf.truncated = r != 0.0;
            break;
        }
        cf.terms.push_back(static_cast<std::int64_t>(a));
        x = r;
    }
    return cf;
}

ContinuedFraction cf_from_rational(std::int64_t num, std::int64_t den) {
    if (den <= 0 || num < 0 || num >= den)
        throw config_error("cfrac", "cf_from_rational needs 0 <= num/den < 1");
    ContinuedFraction cf;
    while (num != 0) {
        cf.terms.push_back(den / num);
        const auto r = den % num;
        den = num;
        num = r;
    }
    cf.infinite = true;
    return cf;
}

std::vector<std::int64_t> common_terms(std::int64_t a, std::int64_t b, std::int64_t c,
                                       std::int64_t d, int max_terms) {
    // current interval (lo_n/lo_d, hi_n/hi_d); 1/x maps it to (hi_d/hi_n, lo_d/lo_n)
    std::int64_t lo_n = a, lo_d = b, hi_n = c, hi_d = d;
    std::vector<std::int64_t> out;
    while (static_cast<int>(out.size()) < max_terms && lo_n > 0) {
        const auto t = hi_d / hi_n;
        if (lo_d > (t + 1) * lo_n) break;  // 1/x straddles an integer
        out.push_back(t);
        const auto new_lo_n = hi_d - t * hi_n;
        const auto new_lo_d = hi_n;
        const auto new_hi_n = lo_d - t * lo_n;
        const auto new_hi_d = lo_n;
        lo_n = new_lo_n;
        lo_d = new_lo_d;
        hi_n = new_hi_n;
        hi_d = new_hi_d;
    }
    return out;
}

}  // namespace renorm
