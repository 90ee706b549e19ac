#include "doctest.h"

#include <random>

#include "tstencil/simd.hpp"

using namespace tstencil::simd;

namespace {

template <int VL>
std::array<double, VL> iota_lanes(double start) {
  std::array<double, VL> a{};
  for (int l = 0; l < VL; ++l) a[l] = start + l;
  return a;
}

template <class V>
std::array<double, V::lanes> lanes_of(V v) {
  return to_array(v);
}

// Every lane op of V must agree bit for bit with PortableVec on the same input.
template <class V>
void check_against_portable(std::mt19937_64& rng) {
  constexpr int VL = V::lanes;
  using P = PortableVec<VL>;
  std::uniform_real_distribution<double> dist(-4.0, 4.0);
  std::array<double, VL> ra{}, rb{}, rc{};
  for (int l = 0; l < VL; ++l) {
    ra[l] = dist(rng);
    rb[l] = dist(rng);
    rc[l] = dist(rng);
  }
  const V a = from_array<V>(ra), b = from_array<V>(rb), c = from_array<V>(rc);
  const P pa = from_array<P>(ra), pb = from_array<P>(rb), pc = from_array<P>(rc);
  CHECK(lanes_of(add(a, b)) == lanes_of(add(pa, pb)));
  CHECK(lanes_of(mul(a, b)) == lanes_of(mul(pa, pb)));
  const auto f = lanes_of(fma(a, b, c));
  const auto pf = lanes_of(fma(pa, pb, pc));
  for (int l = 0; l < VL; ++l) CHECK(f[l] == doctest::Approx(pf[l]).epsilon(1e-15));
  CHECK(lanes_of(blend<0b0101>(a, b)) == lanes_of(blend<0b0101>(pa, pb)));
  CHECK(lanes_of(blend<1u << (VL - 1)>(a, b)) == lanes_of(blend<1u << (VL - 1)>(pa, pb)));
  CHECK(lanes_of(rotate_right<1>(a)) == lanes_of(rotate_right<1>(pa)));
  CHECK(lanes_of(rotate_right<VL - 1>(a)) == lanes_of(rotate_right<VL - 1>(pa)));
  CHECK(lanes_of(rotate_left<1>(a)) == lanes_of(rotate_left<1>(pa)));
  CHECK(lanes_of(rotate_left<2>(a)) == lanes_of(rotate_left<2>(pa)));
  CHECK(lanes_of(interleave<Parity::low>(a, b)) == lanes_of(interleave<Parity::low>(pa, pb)));
  CHECK(lanes_of(interleave<Parity::high>(a, b)) == lanes_of(interleave<Parity::high>(pa, pb)));
  CHECK(lanes_of(half_exchange<Half::low, Half::high>(a, b)) ==
        lanes_of(half_exchange<Half::low, Half::high>(pa, pb)));
  CHECK(lanes_of(half_exchange<Half::high, Half::low>(a, b)) ==
        lanes_of(half_exchange<Half::high, Half::low>(pa, pb)));
  CHECK(lanes_of(exchange<VL / 2, Parity::high>(a, b)) == lanes_of(exchange<VL / 2, Parity::high>(pa, pb)));
  if constexpr (VL == 8) {
    CHECK(lanes_of(exchange<2, Parity::low>(a, b)) == lanes_of(exchange<2, Parity::low>(pa, pb)));
    CHECK(lanes_of(exchange<2, Parity::high>(a, b)) == lanes_of(exchange<2, Parity::high>(pa, pb)));
  }
}

template <class V>
void check_lane_semantics() {
  constexpr int VL = V::lanes;
  const V a = from_array<V>(iota_lanes<VL>(0));
  const V b = from_array<V>(iota_lanes<VL>(100));
  const auto rr = lanes_of(rotate_right<1>(a));
  CHECK(rr[0] == VL - 1);
  for (int l = 1; l < VL; ++l) CHECK(rr[l] == l - 1);
  const auto rl = lanes_of(rotate_left<1>(a));
  CHECK(rl[VL - 1] == 0);
  for (int l = 0; l + 1 < VL; ++l) CHECK(rl[l] == l + 1);

  // rotate_left<K> undoes rotate_right<K>.
  CHECK(lanes_of(rotate_left<2>(rotate_right<2>(a))) == lanes_of(a));
  CHECK(lanes_of(rotate_right<VL - 1>(rotate_left<VL - 1>(a))) == lanes_of(a));

  const auto bl = lanes_of(blend<0b0011>(a, b));
  CHECK(bl[0] == 100);
  CHECK(bl[1] == 101);
  CHECK(bl[2] == 2);

  // The two interleave parities together enumerate every lane of a and b.
  const auto lo = lanes_of(interleave<Parity::low>(a, b));
  const auto hi = lanes_of(interleave<Parity::high>(a, b));
  std::array<int, 2 * VL> seen{};
  for (int l = 0; l < VL; ++l) {
    for (double v : {lo[l], hi[l]}) {
      const int idx = v >= 100 ? VL + static_cast<int>(v) - 100 : static_cast<int>(v);
      ++seen[idx];
    }
  }
  for (int s : seen) CHECK(s == 1);
  CHECK(lo[0] == 0);
  CHECK(lo[1] == 100);
  CHECK(hi[0] == 1);
  CHECK(hi[1] == 101);

  const auto hx = lanes_of(half_exchange<Half::high, Half::low>(a, b));
  CHECK(hx[0] == VL / 2);
  CHECK(hx[VL / 2] == 100);

  // Exchanging the low and high halves and then exchanging back is the identity.
  const V l2 = exchange<VL / 2, Parity::low>(a, b);
  const V h2 = exchange<VL / 2, Parity::high>(a, b);
  CHECK(lanes_of(exchange<VL / 2, Parity::low>(l2, h2)) == lanes_of(a));
  CHECK(lanes_of(exchange<VL / 2, Parity::high>(l2, h2)) == lanes_of(b));
}

}  // namespace

TEST_CASE("portable vector lane semantics") {
  check_lane_semantics<PortableVec<4>>();
  check_lane_semantics<PortableVec<8>>();
}

TEST_CASE("native vector lane semantics") {
  check_lane_semantics<Vec<4>>();
  check_lane_semantics<Vec<8>>();
}

TEST_CASE("native vectors agree with the portable fallback on random inputs") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    check_against_portable<Vec<4>>(rng);
    check_against_portable<Vec<8>>(rng);
  }
}

TEST_CASE("load, store and broadcast") {
  alignas(64) double buf[8] = {1, 2, 3, 4, 5, 6, 7, 8};
  alignas(64) double out[8] = {};
  const auto v = Vec<8>::load(buf);
  v.store(out);
  for (int l = 0; l < 8; ++l) CHECK(out[l] == buf[l]);
  CHECK(Vec<4>::loadu(buf + 1).get(0) == 2.0);
  CHECK(Vec<4>::broadcast(2.5).get(3) == 2.5);
}

TEST_CASE("latency model") {
  LatencyModel m;
  CHECK(m.latency(LatencyClass::in_lane) == 1);
  CHECK(m.latency(LatencyClass::cross_lane) == 3);
  CHECK(exchange_class(1) == LatencyClass::in_lane);
  CHECK(exchange_class(2) == LatencyClass::cross_lane);
  CHECK(exchange_class(4) == LatencyClass::cross_lane);
}

TEST_CASE("native binding reflects the build") {
#if TSTENCIL_HAVE_AVX2
  CHECK(has_native(4));
#else
  CHECK_FALSE(has_native(4));
#endif
  CHECK_FALSE(has_native(16));
}
