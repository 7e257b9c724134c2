#include <vector>

#include "doctest.h"
#include "protogram/checksum.hpp"

using namespace protogram;

TEST_CASE("internet checksum reference values") {
  const std::vector<std::uint8_t> zeros(20, 0);
  CHECK(internet_checksum(zeros) == 0xFFFF);
  // Worked example bytes from the standard computation note: sum 0xddf2, complement 0x220d.
  const std::vector<std::uint8_t> bytes{0x00, 0x01, 0xf2, 0x03, 0xf4, 0xf5, 0xf6, 0xf7};
  CHECK(internet_checksum(bytes) == 0x220d);
  CHECK(internet_checksum(std::vector<std::uint8_t>{}) == 0xFFFF);
}

TEST_CASE("odd lengths pad with a zero byte") {
  const std::vector<std::uint8_t> odd{0x12, 0x34, 0x56};
  const std::vector<std::uint8_t> even{0x12, 0x34, 0x56, 0x00};
  CHECK(internet_checksum(odd) == internet_checksum(even));
}

TEST_CASE("a buffer carrying its own checksum verifies to zero") {
  for (std::uint8_t seed = 1; seed < 40; ++seed) {
    std::vector<std::uint8_t> b;
    for (int i = 0; i < 2 * seed; ++i) b.push_back(static_cast<std::uint8_t>(seed * 31 + i * 7));
    const auto c = internet_checksum(b);
    b.push_back(static_cast<std::uint8_t>(c >> 8));
    b.push_back(static_cast<std::uint8_t>(c & 0xFF));
    CHECK(internet_checksum(b) == 0);
  }
}
