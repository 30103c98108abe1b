#include "klap/rng.hpp"

#include <cmath>

#include "klap/common.hpp"

namespace klap {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::string_view label) {
  // Key derivation: scramble the seed once, fold in the label hash, then
  // scramble again so that nearby (seed, label) pairs decorrelate.
  std::uint64_t s = seed;
  std::uint64_t mixed = splitmix64(s) ^ fnv1a(label);
  state_ = splitmix64(mixed);
}

std::uint64_t RngStream::next_u64() { return splitmix64(state_); }

double RngStream::next_unit() {
  // 53-bit mantissa, offset by half an ulp to land strictly inside (0,1).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

int RngStream::next_index(const std::vector<double>& cumulative) {
  if (cumulative.empty()) throw DegenerateInputError("empty cumulative table");
  const double u = next_unit() * cumulative.back();
  int lo = 0;
  int hi = static_cast<int>(cumulative.size()) - 1;
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (u < cumulative[mid]) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

std::vector<double> random_simplex_point(RngStream& rng, int size) {
  if (size < 1) throw DomainError("simplex point needs size >= 1");
  std::vector<double> w(size);
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    w[i] = -std::log(rng.next_unit());
    sum += w[i];
  }
  for (int i = 0; i < size; ++i) w[i] /= sum;
  return w;
}

}  // namespace klap
