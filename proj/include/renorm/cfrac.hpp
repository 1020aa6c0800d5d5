#pragma once

#include <cstdint>
#include <vector>

namespace renorm {

// Terms a_1, a_2, ... ; `infinite` marks a terminal infinity after the last term.
struct ContinuedFraction {
    std::vector<std::int64_t> terms;
    bool infinite = false;
    // Set by cf_from_real when floating noise cut the expansion short.
    bool truncated = false;

    void validate() const;
};

// p[i], q[i] for i = 0..n with p0 = 0, q0 = 1, p1 = 1, q1 = a1.
struct Convergents {
    std::vector<std::int64_t> p;
    std::vector<std::int64_t> q;

    int depth() const { return static_cast<int>(q.size()) - 1; }
};

double theta_N(int N);

// [N, N, ..., N] with n terms.
ContinuedFraction golden_cf(int N, int n);

double cf_value(const ContinuedFraction& cf, int depth);
double cf_value(const ContinuedFraction& cf);

Convergents convergents(const ContinuedFraction& cf, int n);

double gauss_map(double theta);

ContinuedFraction cf_from_real(double x, int n);

// Exact expansion of num/den (0 <= num/den < 1), closed with the infinity marker.
ContinuedFraction cf_from_rational(std::int64_t num, std::int64_t den);

// Terms shared by every real in the open interval (a/b, c/d), 0 <= a/b < c/d <= 1.
std::vector<std::int64_t> common_terms(std::int64_t a, std::int64_t b, std::int64_t c,
                                       std::int64_t d, int max_terms);

}  // namespace renorm
