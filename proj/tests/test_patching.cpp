#include <catch2/catch_amalgamated.hpp>

#include <cstddef>

#include "hpmixer/gradcheck.hpp"
#include "hpmixer/patching.hpp"
#include "hpmixer/rng.hpp"

using namespace hpmixer;

TEST_CASE("patch spec derives counts and fine-length default") {
  auto spec = make_patch_spec(96, 16, 8);
  CHECK(spec.len == 96);
  CHECK(spec.coarse_len == 16);
  CHECK(spec.n_coarse == 6);
  CHECK(spec.fine_len == 8);
  CHECK(spec.n_fine == 2);

  // fine_len 0 picks coarse/2 when even, else the coarse length itself.
  CHECK(make_patch_spec(96, 24).fine_len == 12);
  CHECK(make_patch_spec(96, 24).n_fine == 2);
  auto odd = make_patch_spec(45, 9);
  CHECK(odd.fine_len == 9);
  CHECK(odd.n_fine == 1);
}

TEST_CASE("canonical patch sizes are the documented search grid") {
  CHECK(patch_size_choices() == std::vector<std::size_t>{4, 8, 12, 16, 24, 32, 48});
}

TEST_CASE("invalid divisors raise errors naming the field and valid choices") {
  using Catch::Matchers::ContainsSubstring;
  CHECK_THROWS_WITH(make_patch_spec(96, 36),
                    ContainsSubstring("patch_len_coarse") &&
                        ContainsSubstring("96"));
  // 100 is divisible by 4 only within the canonical grid.
  CHECK_THROWS_WITH(make_patch_spec(100, 24), ContainsSubstring("4"));
  CHECK_THROWS_WITH(make_patch_spec(96, 16, 12),
                    ContainsSubstring("patch_len_fine") &&
                        ContainsSubstring("16"));
  CHECK_THROWS_AS(make_patch_spec(0, 16), ConfigError);
  CHECK_THROWS_AS(make_patch_spec(96, 0), ConfigError);
}

TEST_CASE("patching both levels is a bit-exact round trip") {
  auto spec = make_patch_spec(96, 16, 4);
  Rng rng(5);
  auto x = Tensor<double>::randn({3, 2, 96}, rng);

  auto coarse = patch_coarse(x, spec);
  REQUIRE(coarse.shape() == Shape{3, 2, 6, 16});
  auto fine = patch_fine(coarse, spec);
  REQUIRE(fine.shape() == Shape{3, 2, 6, 4, 4});

  auto back_coarse = unpatch_fine(fine, spec);
  REQUIRE(back_coarse.shape() == coarse.shape());
  CHECK(back_coarse.value_vec() == coarse.value_vec());

  auto back = unpatch_coarse(back_coarse, spec);
  REQUIRE(back.shape() == x.shape());
  CHECK(back.value_vec() == x.value_vec());
}

TEST_CASE("patch order is row-major: element (n, p) is x[n*P + p]") {
  auto spec = make_patch_spec(8, 4, 2);
  auto x = Tensor<double>::from({8}, {0, 1, 2, 3, 4, 5, 6, 7});
  auto coarse = patch_coarse(x, spec);
  CHECK(coarse.at(0, 0) == 0.0);
  CHECK(coarse.at(0, 3) == 3.0);
  CHECK(coarse.at(1, 0) == 4.0);
  auto fine = patch_fine(coarse, spec);
  CHECK(fine.at(1, 1, 0) == 6.0);
  CHECK(fine.at(1, 1, 1) == 7.0);
}

TEST_CASE("shape mismatches in (un)patching raise ShapeError") {
  auto spec = make_patch_spec(96, 16, 4);
  Rng rng(6);
  auto wrong = Tensor<double>::randn({2, 48}, rng);
  CHECK_THROWS_AS(patch_coarse(wrong, spec), ShapeError);
  auto bad_patches = Tensor<double>::randn({2, 5, 16}, rng);
  CHECK_THROWS_AS(unpatch_coarse(bad_patches, spec), ShapeError);
  auto bad_fine = Tensor<double>::randn({2, 6, 4, 3}, rng);
  CHECK_THROWS_AS(unpatch_fine(bad_fine, spec), ShapeError);
  CHECK_THROWS_AS(patch_fine(Tensor<double>(Shape{2, 6, 8}), spec), ShapeError);
}

TEST_CASE("patching is gradient-transparent") {
  auto spec = make_patch_spec(12, 4, 2);
  auto f = [&](const std::vector<Tensor<double>>& in) {
    auto fine = patch_fine(patch_coarse(in[0], spec), spec);
    auto round = unpatch_coarse(unpatch_fine(fine, spec), spec);
    return sum_all(mul(round, in[1]));
  };
  Rng rng(9);
  auto result = grad_check<double>(f, {Tensor<double>::randn({2, 12}, rng),
                                       Tensor<double>::randn({2, 12}, rng)});
  CHECK(result.max_rel_err < 1e-6);
}
