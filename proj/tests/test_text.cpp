#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "protogram/rng.hpp"
#include "protogram/text.hpp"

using namespace protogram;

TEST_CASE("splitmix64 matches the reference generator") {
  // First outputs of the reference splitmix64 stream seeded with 0 and 1.
  CHECK(text::splitmix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(text::splitmix64(1) == 0x910a2dec89025cc1ULL);
}

TEST_CASE("Rng wraps the standard mt19937_64 stream") {
  // The standard fixes the 10000th output of a default-seeded mt19937_64.
  Rng rng(5489);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next();
  CHECK(v == 9981545732273789042ULL);
}

TEST_CASE("Rng::below stays in range and is reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 2000; ++i) {
    const auto bound = static_cast<std::uint64_t>(1 + i % 37);
    const auto x = a.below(bound);
    CHECK(x < bound);
    CHECK(x == b.below(bound));
  }
}

TEST_CASE("Rng::shuffle is a permutation") {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  Rng rng(3);
  rng.shuffle(v);
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("string helpers") {
  CHECK(text::to_lower("Data Offset") == "data offset");
  CHECK(text::trim("  a b \n") == "a b");
  CHECK(text::collapse_spaces("a   b\t c") == "a b c");
  CHECK(text::contains_ci("The CHECKSUM field", "checksum"));
  CHECK(text::equals_ci("Window", "WINDOW"));
  CHECK(text::levenshtein("kitten", "sitting") == 3);
  CHECK(text::levenshtein("", "abc") == 3);
  CHECK(text::leading_spaces("   x") == 3);
  CHECK(text::has_digit("Data 1"));
  CHECK_FALSE(text::has_digit("Data"));
}
