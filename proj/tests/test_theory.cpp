#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "maxgrad/order_stats.hpp"
#include "maxgrad/theory.hpp"

using namespace maxgrad;

namespace {

net::Architecture worked_example() {
    // the configuration used throughout as a cross-library reference point
    net::Architecture a;
    a.input_width = 2;
    a.hidden_widths = {5, 5, 5};
    a.output_width = 2;
    a.maxout_rank = 5;
    return a;
}

constexpr double kC = 0.55555;

}  // namespace

TEST_CASE("directional derivative moment bounds match frozen references") {
    const net::Architecture arch = worked_example();

    const auto t1 = theory::jacobian_moment_bounds(arch, kC, 1);
    REQUIRE(t1.lower.has_value());
    REQUIRE(t1.upper.has_value());
    CHECK(*t1.lower == doctest::Approx(9.8314319792948786e-5).epsilon(1e-11));
    CHECK(*t1.upper == doctest::Approx(3.6590720680048106).epsilon(1e-11));
    CHECK(t1.quantity == "jacobian_sq_moment");

    const auto t2 = theory::jacobian_moment_bounds(arch, kC, 2);
    CHECK_FALSE(t2.lower.has_value());
    CHECK(*t2.upper == doctest::Approx(5485.4120057944509).epsilon(1e-11));

    const auto t3 = theory::jacobian_moment_bounds(arch, kC, 3);
    CHECK(*t3.upper == doctest::Approx(2609766.2798468729).epsilon(1e-11));

    const auto var = theory::jacobian_variance_bound(arch, kC);
    CHECK(*var.upper == doctest::Approx(5485.4120057847852).epsilon(1e-11));
}

TEST_CASE("mean bounds bracket tightens to equality without hidden layers") {
    net::Architecture arch;
    arch.input_width = 3;
    arch.output_width = 2;
    arch.maxout_rank = 5;
    const auto b = theory::jacobian_moment_bounds(arch, 0.9, 1);
    CHECK(*b.lower == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(*b.upper == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(theory::wide_deep_mean(arch) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("mean bounds scale monotonically with c and stay ordered") {
    const net::Architecture arch = worked_example();
    double prev_upper = 0.0;
    for (double c : {0.1, 0.3, 0.55555, 1.0, 2.0}) {
        const auto b = theory::jacobian_moment_bounds(arch, c, 1);
        CHECK(*b.lower <= *b.upper);
        CHECK(*b.lower > 0.0);
        CHECK(*b.upper > prev_upper);
        prev_upper = *b.upper;
    }
}

TEST_CASE("closed forms are defined only for maxout networks and positive scales") {
    net::Architecture relu = worked_example();
    relu.activation = net::Activation::relu;
    CHECK_THROWS_AS(theory::jacobian_moment_bounds(relu, 2.0, 1), std::invalid_argument);
    const net::Architecture arch = worked_example();
    CHECK_THROWS_AS(theory::jacobian_moment_bounds(arch, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(theory::jacobian_moment_bounds(arch, -0.5, 1), std::invalid_argument);
    CHECK_THROWS_AS(theory::jacobian_moment_bounds(arch, kC, 0), std::invalid_argument);
}

TEST_CASE("activation length means form the expected ladder with gaussian biases") {
    net::Architecture arch;
    arch.input_width = 10;
    arch.hidden_widths = {10, 10, 10, 10, 10};
    arch.output_width = 3;
    arch.maxout_rank = 5;
    const double c = order_stats::recommended_c(5);  // c*m = 1 by construction
    const std::vector<double> ones(10, 1.0);

    for (int layer = 1; layer <= 5; ++layer) {
        const auto st = theory::activation_length_stats(arch, c, ones, layer, 1);
        // input norm augmented to 11, then +1/10 bias contribution per layer
        CHECK(st.exact_mean == doctest::Approx(1.1 + 0.1 * (layer - 1)).epsilon(1e-9));
        CHECK(st.layer == layer);
        CHECK_FALSE(st.moment_upper.has_value());
    }

    arch.bias_mode = net::BiasMode::zero;
    for (int layer = 1; layer <= 5; ++layer) {
        const auto st = theory::activation_length_stats(arch, c, ones, layer, 1);
        CHECK(st.exact_mean == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("activation length variance and higher-moment bounds match frozen references") {
    net::Architecture arch;
    arch.input_width = 10;
    arch.hidden_widths = {10, 10, 10, 10, 10};
    arch.output_width = 3;
    arch.maxout_rank = 5;
    const double c = order_stats::recommended_c(5);
    const std::vector<double> ones(10, 1.0);

    const auto v5 = theory::activation_length_stats(arch, c, ones, 5, 1);
    CHECK(v5.variance_upper == doctest::Approx(98732.206872892168).epsilon(1e-9));

    const auto t2 = theory::activation_length_stats(arch, c, ones, 2, 2);
    REQUIRE(t2.moment_upper.has_value());
    REQUIRE(t2.moment_lower.has_value());
    CHECK(*t2.moment_upper == doctest::Approx(169.23958564405972).epsilon(1e-9));
    CHECK(*t2.moment_lower == doctest::Approx(1.22).epsilon(1e-9));
    CHECK(*t2.moment_lower <= *t2.moment_upper);
    // Jensen consistency: the lower bound on E[A^2] cannot exceed mean^2 here,
    // since it is built from the same layerwise mean factors
    const auto m2mean = theory::activation_length_stats(arch, c, ones, 2, 1);
    CHECK(*t2.moment_lower <= m2mean.exact_mean * m2mean.exact_mean + 1e-9);
}

TEST_CASE("activation length stats validate their arguments") {
    net::Architecture arch;
    arch.input_width = 2;
    arch.hidden_widths = {3};
    arch.output_width = 1;
    arch.maxout_rank = 3;
    const std::vector<double> x = {1.0, 0.0};
    CHECK_THROWS_AS(theory::activation_length_stats(arch, 1.0, x, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(theory::activation_length_stats(arch, 1.0, x, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(theory::activation_length_stats(arch, 1.0, {1.0}, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(theory::activation_length_stats(arch, 1.0, x, 1, 0), std::invalid_argument);
}

TEST_CASE("input gradient sup-norm constant matches frozen references") {
    net::Architecture deep = worked_example();
    CHECK(theory::c_grad_bound(deep, kC, 1) == doctest::Approx(5.7309899442437695).epsilon(1e-10));

    net::Architecture shallow = deep;
    shallow.hidden_widths = {5};
    CHECK(theory::c_grad_bound(shallow, kC, 1) == doctest::Approx(1.98227868394116629).epsilon(1e-10));

    // ck < 1 pins the amplification factor at 1
    net::Architecture a = shallow;
    const double small_c = 0.1;
    const double expected = std::exp(0.5 * (1.0 / 25.0 + 1.0)) / std::sqrt(2.0);
    CHECK(theory::c_grad_bound(a, small_c, 1) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("region count bound reproduces hand-evaluated cases") {
    // few units in a wide input space: binom(rk, 2r) * binom(n, r) * k^(n-r)
    const auto a = theory::region_count_bound(3, 5, 2, 1, 1.0);
    CHECK(a.upper == doctest::Approx(12.0).epsilon(1e-12));
    CHECK(a.log_upper == doctest::Approx(std::log(12.0)).epsilon(1e-12));

    // many units: (t k n)^{n0} binom(n0 k, 2 n0) / ((2k)^r n0!)
    const auto b = theory::region_count_bound(10, 2, 2, 3, 1.0);
    CHECK(b.upper == doctest::Approx(400.0 / 128.0).epsilon(1e-12));

    // log form stays finite even when the linear form overflows
    const auto huge = theory::region_count_bound(1000000, 100, 5, 0, 1.0);
    CHECK(std::isinf(huge.upper));
    CHECK(std::isfinite(huge.log_upper));
    CHECK(huge.log_upper > 0.0);

    CHECK_THROWS_AS(theory::region_count_bound(3, 0, 2, 0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(theory::region_count_bound(3, 2, 1, 0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(theory::region_count_bound(3, 2, 2, 0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(theory::region_count_bound(-1, 2, 2, 0, 1.0), std::invalid_argument);
}

TEST_CASE("curve length bounds match frozen references and omit the lower bound") {
    const net::Architecture arch = worked_example();
    const auto mean = theory::curve_length_bounds(arch, kC, 1);
    CHECK_FALSE(mean.lower.has_value());
    CHECK(*mean.upper == doctest::Approx(1.9128701126853361).epsilon(1e-11));

    const auto m2 = theory::curve_length_bounds(arch, kC, 2);
    CHECK(*m2.upper == doctest::Approx(74.063567331005944).epsilon(1e-11));

    const auto var = theory::curve_length_variance_bound(arch, kC);
    CHECK(*var.upper == doctest::Approx(3.6590720680048106).epsilon(1e-11));

    // unit-length segment through an affine map cannot stretch in expectation
    net::Architecture affine;
    affine.input_width = 2;
    affine.output_width = 2;
    affine.maxout_rank = 5;
    CHECK(*theory::curve_length_bounds(affine, kC, 1).upper == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ntk bounds reproduce the scalar-output reference bracket") {
    net::Architecture arch;
    arch.input_width = 2;
    arch.hidden_widths = {3};
    arch.output_width = 1;
    arch.maxout_rank = 5;
    arch.bias_mode = net::BiasMode::zero;
    const std::vector<double> x = {1.0, 0.0};

    const auto b = theory::ntk_bounds(arch, kC, x);
    CHECK(b.p == 5.0);
    CHECK(b.p_w == 9.0);
    CHECK(b.mean_lower == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(b.mean_upper == doctest::Approx(9.0001021798531641).epsilon(1e-11));
    CHECK(b.second_moment_upper == doctest::Approx(6415.5264361606218).epsilon(1e-10));
    CHECK(b.mean_lower <= b.mean_upper);
}

TEST_CASE("ntk bounds enforce their hypotheses") {
    net::Architecture arch;
    arch.input_width = 2;
    arch.hidden_widths = {3};
    arch.output_width = 1;
    arch.maxout_rank = 5;
    arch.bias_mode = net::BiasMode::zero;
    const std::vector<double> x = {1.0, 0.0};

    net::Architecture wide_out = arch;
    wide_out.output_width = 2;
    CHECK_THROWS_AS(theory::ntk_bounds(wide_out, kC, x), std::invalid_argument);

    net::Architecture biased = arch;
    biased.bias_mode = net::BiasMode::gaussian;
    CHECK_THROWS_AS(theory::ntk_bounds(biased, kC, x), std::invalid_argument);

    // the closed form needs s <= c <= l
    CHECK_THROWS_AS(theory::ntk_bounds(arch, 0.01, x), std::invalid_argument);
    CHECK_THROWS_AS(theory::ntk_bounds(arch, 3.5, x), std::invalid_argument);
    CHECK_THROWS_AS(theory::ntk_bounds(arch, kC, {1.0}), std::invalid_argument);
}

TEST_CASE("architecture check summarizes the width and scale recommendations") {
    const net::Architecture arch = worked_example();
    const auto chk = theory::architecture_check(arch, kC);
    CHECK(chk.width_sum == doctest::Approx(3.0 / 25.0).epsilon(1e-14));
    CHECK(chk.width_ok);
    CHECK(chk.ck == doctest::Approx(2.77775).epsilon(1e-14));
    CHECK(chk.recommended == doctest::Approx(0.5555492482288212).epsilon(1e-11));
    CHECK(chk.c_is_recommended);  // 0.55555 sits within 1e-6 of 1/m

    const auto off = theory::architecture_check(arch, 0.5);
    CHECK_FALSE(off.c_is_recommended);

    net::Architecture narrow = arch;
    narrow.hidden_widths = std::vector<int>(30, 1);  // sum 1/(n_l k) = 6 > 1
    const auto bad = theory::architecture_check(narrow, kC);
    CHECK_FALSE(bad.width_ok);
}
