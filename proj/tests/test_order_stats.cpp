#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "maxgrad/order_stats.hpp"
#include "maxgrad/rng.hpp"

using namespace maxgrad;
using order_stats::OrderStatKind;

namespace {

struct Frozen {
    int k;
    double s, l, m;
};

// Reference values computed once with 30-digit mpmath quadrature and frozen here.
constexpr Frozen kFrozen[] = {
    {2, 0.3633802276324187, 1.636619772367581, 1.0},
    {3, 0.1927984737408401, 2.102657790843584, 1.275664447710896},
    {4, 0.1207021413774029, 2.470210387791445, 1.551328895421792},
    {5, 0.08307731289708446, 2.773749067094284, 1.800020435970633},
    {6, 0.06083484754909345, 3.032362969502892, 2.021739069357418},
    {7, 0.04654509854329177, 3.257711588977921, 2.220304135585677},
    {8, 0.03679903678969692, 3.457433801779871, 2.399534974658937},
    {9, 0.02984476166089626, 3.636804994931652, 2.562617418292491},
    {10, 0.02470371153764711, 3.799620855672991, 2.712103789913392},
    {12, 0.01774760896622402, 4.086208721752338, 2.978019089570249},
    {15, 0.01177347759523607, 4.444466265987316, 3.314437058640954},
    {20, 0.006879966826046248, 4.916870802209548, 3.763159714587272},
    {50, 0.001187230761496683, 6.480928613936222, 5.274044600380348},
    {100, 0.0003051289813859432, 7.705848692229543, 6.472430659108656},
};

}  // namespace

TEST_CASE("quadrature constants match the frozen high-precision references") {
    for (const Frozen& f : kFrozen) {
        const auto c = order_stats::compute_constants(f.k);
        CAPTURE(f.k);
        CHECK(c.k == f.k);
        CHECK(c.s == doctest::Approx(f.s).epsilon(1e-12));
        CHECK(c.l == doctest::Approx(f.l).epsilon(1e-12));
        CHECK(c.m == doctest::Approx(f.m).epsilon(1e-12));
    }
}

TEST_CASE("rank-2 identities hold exactly: s + l = 2 and m = 1") {
    const auto c = order_stats::compute_constants(2);
    CHECK(std::abs(c.s + c.l - 2.0) < 1e-12);
    CHECK(std::abs(c.m - 1.0) < 1e-12);
}

TEST_CASE("constants are monotone in the rank") {
    for (size_t i = 1; i < std::size(kFrozen); ++i) {
        const auto lo = order_stats::compute_constants(kFrozen[i - 1].k);
        const auto hi = order_stats::compute_constants(kFrozen[i].k);
        CHECK(hi.s < lo.s);  // min of more draws shrinks
        CHECK(hi.l > lo.l);  // max of more draws grows
        CHECK(hi.m > lo.m);
    }
    // ordering s < 1 < l and m >= 1 for every rank
    for (const Frozen& f : kFrozen) {
        const auto c = order_stats::compute_constants(f.k);
        CHECK(c.s > 0.0);
        CHECK(c.s < 1.0);
        CHECK(c.l > 1.0);
        CHECK(c.m >= 1.0 - 1e-12);
    }
}

TEST_CASE("cached_constants returns the same values as compute_constants") {
    for (int k : {2, 5, 17}) {
        const auto& a = order_stats::cached_constants(k);
        const auto b = order_stats::compute_constants(k);
        CHECK(a.s == b.s);
        CHECK(a.l == b.l);
        CHECK(a.m == b.m);
        // repeat lookups hand back the identical cached object
        CHECK(&order_stats::cached_constants(k) == &a);
    }
}

TEST_CASE("recommended weight scale is the reciprocal of m") {
    CHECK(order_stats::recommended_c(2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(order_stats::recommended_c(5) == doctest::Approx(0.5555492482288212).epsilon(1e-12));
    for (int k : {3, 8, 25}) {
        const auto& c = order_stats::cached_constants(k);
        CHECK(order_stats::recommended_c(k) == doctest::Approx(1.0 / c.m).epsilon(1e-14));
    }
}

TEST_CASE("stabilizing range is (1/l, 1/s) and contains the recommended scale") {
    const auto r = order_stats::bound_stabilizing_range(2);
    CHECK(r.first == doctest::Approx(0.61101547035165729).epsilon(1e-10));
    CHECK(r.second == doctest::Approx(2.7519383938841087).epsilon(1e-10));
    for (int k : {2, 5, 10}) {
        const auto range = order_stats::bound_stabilizing_range(k);
        const double rec = order_stats::recommended_c(k);
        CHECK(range.first < rec);
        CHECK(rec < range.second);
    }
}

TEST_CASE("order statistic sampler agrees with the quadrature constants") {
    const int k = 3;
    const auto& c = order_stats::cached_constants(k);
    rng::Stream s(77, 0);
    const int n = 200000;
    double sum_min = 0, sum_max = 0, sum_gauss_sq = 0;
    for (int i = 0; i < n; ++i) {
        sum_min += order_stats::sample_order_stat(OrderStatKind::min_chisq1, k, s);
        sum_max += order_stats::sample_order_stat(OrderStatKind::max_chisq1, k, s);
        const double g = order_stats::sample_order_stat(OrderStatKind::max_gauss, k, s);
        sum_gauss_sq += g * g;
    }
    CHECK(sum_min / n == doctest::Approx(c.s).epsilon(0.02));
    CHECK(sum_max / n == doctest::Approx(c.l).epsilon(0.02));
    CHECK(sum_gauss_sq / n == doctest::Approx(c.m).epsilon(0.02));
}

TEST_CASE("sampled order statistics respect their support") {
    rng::Stream s(3, 0);
    for (int i = 0; i < 1000; ++i) {
        const double mn = order_stats::sample_order_stat(OrderStatKind::min_chisq1, 4, s);
        const double mx = order_stats::sample_order_stat(OrderStatKind::max_chisq1, 4, s);
        CHECK(mn >= 0.0);
        CHECK(mx >= 0.0);
    }
}

TEST_CASE("order statistic densities integrate to one") {
    for (int k : {2, 5, 9}) {
        CHECK(order_stats::pdf_mass(OrderStatKind::min_chisq1, k) == doctest::Approx(1.0).epsilon(1e-7));
        CHECK(order_stats::pdf_mass(OrderStatKind::max_chisq1, k) == doctest::Approx(1.0).epsilon(1e-7));
        CHECK(order_stats::pdf_mass(OrderStatKind::max_gauss, k) == doctest::Approx(1.0).epsilon(1e-7));
    }
}

TEST_CASE("out-of-range ranks are rejected") {
    CHECK_THROWS_AS(order_stats::compute_constants(1), std::invalid_argument);
    CHECK_THROWS_AS(order_stats::compute_constants(0), std::invalid_argument);
    CHECK_THROWS_AS(order_stats::compute_constants(-3), std::invalid_argument);
    CHECK_THROWS_AS(order_stats::compute_constants(101), std::invalid_argument);
    CHECK_THROWS_AS(order_stats::recommended_c(1), std::invalid_argument);
    CHECK_THROWS_AS(order_stats::bound_stabilizing_range(200), std::invalid_argument);
}
