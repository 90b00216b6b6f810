#include <catch_amalgamated.hpp>

#include <array>
#include <bitset>
#include <random>
#include <vector>

#include "hashlane/core.hpp"

using namespace hashlane;

namespace {

// Pascal's triangle, built row by row; independent of ball_size's
// multiplicative binomial recurrence.
std::vector<std::vector<WideCount>> pascal(unsigned max_l) {
  std::vector<std::vector<WideCount>> rows(max_l + 1);
  for (unsigned l = 0; l <= max_l; ++l) {
    rows[l].assign(l + 1, 1);
    for (unsigned i = 1; i < l; ++i) rows[l][i] = rows[l - 1][i - 1] + rows[l - 1][i];
  }
  return rows;
}

}  // namespace

TEST_CASE("hamming distance counts differing bits", "[core]") {
  // Bit j of the integer is bit j of the code, so 1010 (binary) is 0b1010.
  CHECK(hamming_distance(BinaryCode(0b1010, 4), BinaryCode(0b0110, 4)) == 2);
  CHECK(hamming_distance(BinaryCode(0b1101, 4), BinaryCode(0b1101, 4)) == 0);
  CHECK(hamming_distance(BinaryCode(0b0000, 4), BinaryCode(0b1111, 4)) == 4);
}

TEST_CASE("hamming distance rejects mismatched lengths", "[core]") {
  try {
    (void)hamming_distance(BinaryCode(1, 4), BinaryCode(1, 5));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::length_mismatch);
  }
}

TEST_CASE("pack_bits layout", "[core]") {
  const std::array<bool, 3> bits{true, false, true};
  const auto code = pack_bits(bits);
  CHECK(code.length() == 3);
  CHECK(code.to_bytes() == std::vector<std::uint8_t>{0x05});

  std::vector<bool> all(64, true);
  const auto full = pack_bits(all);
  CHECK(full.to_bytes() == std::vector<std::uint8_t>(8, 0xFF));

  CHECK_THROWS_AS(pack_bits(std::vector<bool>{}), Error);
  CHECK_THROWS_AS(pack_bits(std::vector<bool>(65, false)), Error);
}

TEST_CASE("binary code padding bits stay zero", "[core]") {
  CHECK_THROWS_AS(BinaryCode(0b10000, 4), Error);
  const std::array<std::uint8_t, 1> dirty{0xF0};
  CHECK_THROWS_AS(BinaryCode::from_bytes(dirty, 4), Error);
  CHECK_THROWS_AS(BinaryCode(0, 0), Error);
  CHECK_THROWS_AS(BinaryCode(0, 65), Error);
}

TEST_CASE("pack/unpack round trip for every length", "[core][property]") {
  std::mt19937_64 rng(42);
  std::bernoulli_distribution coin(0.5);
  for (unsigned l = 1; l <= 64; ++l) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<bool> bools(l);
      for (unsigned j = 0; j < l; ++j) bools[j] = coin(rng);
      const auto code = pack_bits(bools);
      REQUIRE(unpack_bits(code) == bools);
      REQUIRE(BinaryCode::from_bytes(code.to_bytes(), l) == code);
      const auto bytes = code.to_bytes();
      if (l % 8 != 0) REQUIRE((bytes.back() >> (l % 8)) == 0);
    }
  }
}

TEST_CASE("hamming distance equals masked popcount of XORed bytes", "[core][property]") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    const unsigned l = 1 + static_cast<unsigned>(rng() % 64);
    const BinaryCode a(rng() & low_bits_mask(l), l);
    const BinaryCode b(rng() & low_bits_mask(l), l);
    const auto ba = a.to_bytes();
    const auto bb = b.to_bytes();
    unsigned expected = 0;
    for (std::size_t i = 0; i < ba.size(); ++i) {
      std::uint8_t x = ba[i] ^ bb[i];
      if (i + 1 == ba.size() && l % 8 != 0) x &= static_cast<std::uint8_t>((1u << (l % 8)) - 1);
      expected += static_cast<unsigned>(std::bitset<8>(x).count());
    }
    REQUIRE(hamming_distance(a, b) == expected);
    REQUIRE(hamming_distance(b, a) == expected);
    REQUIRE((hamming_distance(a, b) == 0) == (a == b));
  }
}

TEST_CASE("ball_size examples", "[core]") {
  CHECK(ball_size(32, 0) == 1);
  CHECK(ball_size(4, 1) == 5);
  CHECK(ball_size(32, 2) == 529);
  CHECK(ball_size(16, 2) == 137);
  CHECK_THROWS_AS(ball_size(4, 5), Error);
}

TEST_CASE("ball_size matches Pascal's triangle", "[core][property]") {
  const auto rows = pascal(64);
  for (unsigned l = 0; l <= 64; ++l) {
    WideCount cumulative = 0;
    for (unsigned r = 0; r <= l; ++r) {
      cumulative += rows[l][r];
      REQUIRE(ball_size(l, r) == cumulative);
    }
  }
  for (unsigned l = 0; l <= 20; ++l) REQUIRE(ball_size(l, l) == (WideCount{1} << l));
  CHECK(to_string(ball_size(64, 64)) == "18446744073709551616");
}

TEST_CASE("feature set invariants", "[core]") {
  CHECK_NOTHROW(FeatureSet(2, 2, {1, 2, 3, 4}, std::vector<std::int32_t>{0, 1}));
  CHECK_THROWS_AS(FeatureSet(2, 2, {1, 2, 3}), Error);
  CHECK_THROWS_AS(FeatureSet(2, 2, {1, 2, 3, 4}, std::vector<std::int32_t>{0}), Error);
  CHECK_THROWS_AS(FeatureSet(1, 1, {std::numeric_limits<float>::quiet_NaN()}), Error);
  CHECK_THROWS_AS(FeatureSet(1, 1, {std::numeric_limits<float>::infinity()}), Error);
  CHECK_THROWS_AS(FeatureSet(1, 1, {1.0f}, std::vector<std::int32_t>{-1}), Error);

  const FeatureSet unlabeled(1, 2, {1, 2});
  try {
    (void)unlabeled.labels();
    FAIL("expected missing labels");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::missing_labels);
  }
}

TEST_CASE("search params require K <= P", "[core]") {
  CHECK_NOTHROW(SearchParams{10, 10}.validate());
  CHECK_THROWS_AS((SearchParams{5, 10}.validate()), Error);
  CHECK_THROWS_AS((SearchParams{0, 0}.validate()), Error);
}
