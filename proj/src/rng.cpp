#include "tcps/sim/rng.hpp"

namespace tcps {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t master_seed, std::string_view label) {
  return mix(mix(master_seed) ^ fnv1a(label));
}

RngStream::RngStream(std::uint64_t master_seed, std::string_view label)
    : derived_seed_(stream_seed(master_seed, label)), engine_(derived_seed_) {}

double RngStream::uniform() { return unit_(engine_); }

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }

double RngStream::standard_normal() { return normal_(engine_); }

}  // namespace tcps
