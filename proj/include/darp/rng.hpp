#pragma once

#include <cstdint>
#include <random>

namespace darp {

using Rng = std::mt19937_64;

// splitmix64 finalizer; good avalanche, used for seed derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent child seed from (base, stream). Streams are fixed
// small integers per consumer, so adding a consumer never shifts the draws
// of existing ones.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream));
}

// Fixed stream ids for the seed hierarchy.
namespace seed_stream {
constexpr std::uint64_t grid = 1;
constexpr std::uint64_t flow_init = 2;
constexpr std::uint64_t flow_step = 3;
constexpr std::uint64_t congested_pick = 4;
constexpr std::uint64_t net_init = 5;
constexpr std::uint64_t action = 6;
constexpr std::uint64_t replay = 7;
constexpr std::uint64_t episode = 8;
constexpr std::uint64_t eval = 9;
constexpr std::uint64_t method_random = 10;
constexpr std::uint64_t run = 11;
constexpr std::uint64_t tabular = 12;
}  // namespace seed_stream

}  // namespace darp
