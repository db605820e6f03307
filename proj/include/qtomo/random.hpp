// Copyright 2026 The qtomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qtomo {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Root of a reproducible random stream.
///
/// Streams are never shared: independent consumers obtain child seeds via
/// derive(label, index), so results do not depend on scheduling order.
struct RandomSeed {
  std::uint64_t value = 0;

  [[nodiscard]] constexpr RandomSeed derive(std::string_view label, std::uint64_t index = 0) const noexcept {
    std::uint64_t h = detail::splitmix64(value ^ detail::fnv1a(label));
    h = detail::splitmix64(h ^ detail::splitmix64(index + 0x632be59bd9b4e019ULL));
    return RandomSeed{h};
  }

  [[nodiscard]] std::mt19937_64 engine() const { return std::mt19937_64(value); }

  friend constexpr bool operator==(RandomSeed, RandomSeed) = default;
};

}  // namespace qtomo
