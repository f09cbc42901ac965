#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "pmloop/random.hpp"

namespace pmloop {

/// 128-bit identifier in the RFC 4122 version-4 layout.
struct Uuid {
  std::array<std::uint8_t, 16> bytes{};

  std::string str() const;
  static std::optional<Uuid> parse(std::string_view text);

  bool is_nil() const noexcept;
  auto operator<=>(const Uuid&) const = default;
};

/// Produces v4-style uuids. Seeded generators replay identically; the
/// default constructor draws its seed from std::random_device.
class UuidGenerator {
 public:
  UuidGenerator();
  explicit UuidGenerator(std::uint64_t seed) : rng_(seed) {}

  Uuid next();

 private:
  Rng rng_;
};

}  // namespace pmloop
