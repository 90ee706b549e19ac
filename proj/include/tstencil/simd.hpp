#pragma once

// Fixed-width vectors of vl doubles (vl = 4 or 8) and the lane-movement
// operations the transpose layout is built from.
//
// PortableVec<VL> is a plain-array implementation that always exists.
// Avx2Vec (vl = 4) and Avx512Vec (vl = 8) bind the same operations to
// intrinsics when the compiler targets those ISAs. Vec<VL> names whichever
// is preferred for this build. Lane-movement operations take their
// masks/selectors as template arguments, like the instruction immediates
// they model.
//
// Lane semantics (lane 0 = lowest address):
//   blend<M>(a, b)            lane l = bit l of M ? b[l] : a[l]
//   rotate_right<K>(a)        lane l = a[(l - K) mod vl]
//   rotate_left<K>(a)         lane l = a[(l + K) mod vl]
//   exchange<G, P>(a, b)      per 2G-lane chunk: G lanes of a then G lanes
//                             of b, taking the low (P = low) or high G of
//                             each source chunk
//   half_exchange<A, B>(a, b) half A of a followed by half B of b
//   interleave<P>(a, b)       exchange<1, P>: (a0 b0 a2 b2 ...) for low
//   fma(a, b, c)              a * b + c

#include <array>
#include <cstddef>
#include <cstdint>
#include <type_traits>

#if !defined(TSTENCIL_PORTABLE_SIMD) && defined(__AVX2__) && defined(__FMA__)
#define TSTENCIL_HAVE_AVX2 1
#else
#define TSTENCIL_HAVE_AVX2 0
#endif

#if !defined(TSTENCIL_PORTABLE_SIMD) && defined(__AVX512F__)
#define TSTENCIL_HAVE_AVX512 1
#else
#define TSTENCIL_HAVE_AVX512 0
#endif

#if TSTENCIL_HAVE_AVX2 || TSTENCIL_HAVE_AVX512
#include <immintrin.h>
#endif

namespace tstencil::simd {

enum class Half { low = 0, high = 1 };
enum class Parity { low = 0, high = 1 };

enum class LatencyClass { in_lane, cross_lane };

/// Issue/latency parameters for register data movement. Cross-lane moves
/// (anything crossing a 128-bit lane) are slower than in-lane ones.
struct LatencyModel {
  int in_lane_latency = 1;
  int cross_lane_latency = 3;
  int issue_width = 1;

  int latency(LatencyClass c) const { return c == LatencyClass::in_lane ? in_lane_latency : cross_lane_latency; }
};

// ---------------------------------------------------------------------------
// Portable fallback
// ---------------------------------------------------------------------------

template <int VL>
struct PortableVec {
  static_assert(VL == 4 || VL == 8, "vector length must be 4 or 8");
  static constexpr int lanes = VL;
  std::array<double, VL> lane{};

  static PortableVec load(const double* p) {
    PortableVec v;
    for (int l = 0; l < VL; ++l) v.lane[l] = p[l];
    return v;
  }
  static PortableVec loadu(const double* p) { return load(p); }
  static PortableVec broadcast(double s) {
    PortableVec v;
    v.lane.fill(s);
    return v;
  }
  void store(double* p) const {
    for (int l = 0; l < VL; ++l) p[l] = lane[l];
  }
  void storeu(double* p) const { store(p); }
  double get(int l) const { return lane[l]; }
};

template <int VL>
inline PortableVec<VL> add(PortableVec<VL> a, PortableVec<VL> b) {
  for (int l = 0; l < VL; ++l) a.lane[l] += b.lane[l];
  return a;
}

template <int VL>
inline PortableVec<VL> mul(PortableVec<VL> a, PortableVec<VL> b) {
  for (int l = 0; l < VL; ++l) a.lane[l] *= b.lane[l];
  return a;
}

// Unfused: the product is rounded before the add (the build disables
// floating-point contraction).
template <int VL>
inline PortableVec<VL> fma(PortableVec<VL> a, PortableVec<VL> b, PortableVec<VL> c) {
  for (int l = 0; l < VL; ++l) {
    const double p = a.lane[l] * b.lane[l];
    c.lane[l] = p + c.lane[l];
  }
  return c;
}

template <unsigned Mask, int VL>
inline PortableVec<VL> blend(PortableVec<VL> a, PortableVec<VL> b) {
  for (int l = 0; l < VL; ++l)
    if ((Mask >> l) & 1u) a.lane[l] = b.lane[l];
  return a;
}

template <int K, int VL>
inline PortableVec<VL> rotate_right(PortableVec<VL> a) {
  static_assert(K >= 0 && K < VL);
  PortableVec<VL> r;
  for (int l = 0; l < VL; ++l) r.lane[l] = a.lane[(l - K + VL) % VL];
  return r;
}

template <int K, int VL>
inline PortableVec<VL> rotate_left(PortableVec<VL> a) {
  static_assert(K >= 0 && K < VL);
  PortableVec<VL> r;
  for (int l = 0; l < VL; ++l) r.lane[l] = a.lane[(l + K) % VL];
  return r;
}

template <int G, Parity P, int VL>
inline PortableVec<VL> exchange(PortableVec<VL> a, PortableVec<VL> b) {
  static_assert(G >= 1 && 2 * G <= VL && (G & (G - 1)) == 0);
  PortableVec<VL> r;
  const int shift = P == Parity::high ? G : 0;
  for (int l = 0; l < VL; ++l) {
    const int chunk = l / (2 * G) * (2 * G);
    const int w = l % (2 * G);
    r.lane[l] = w < G ? a.lane[chunk + w + shift] : b.lane[chunk + w - G + shift];
  }
  return r;
}

template <Half A, Half B, int VL>
inline PortableVec<VL> half_exchange(PortableVec<VL> a, PortableVec<VL> b) {
  constexpr int h = VL / 2;
  PortableVec<VL> r;
  for (int l = 0; l < h; ++l) {
    r.lane[l] = a.lane[l + (A == Half::high ? h : 0)];
    r.lane[l + h] = b.lane[l + (B == Half::high ? h : 0)];
  }
  return r;
}

template <Parity P, int VL>
inline PortableVec<VL> interleave(PortableVec<VL> a, PortableVec<VL> b) {
  return exchange<1, P>(a, b);
}

// ---------------------------------------------------------------------------
// AVX2, vl = 4
// ---------------------------------------------------------------------------

#if TSTENCIL_HAVE_AVX2
struct Avx2Vec {
  static constexpr int lanes = 4;
  __m256d v;

  static Avx2Vec load(const double* p) { return {_mm256_load_pd(p)}; }
  static Avx2Vec loadu(const double* p) { return {_mm256_loadu_pd(p)}; }
  static Avx2Vec broadcast(double s) { return {_mm256_set1_pd(s)}; }
  void store(double* p) const { _mm256_store_pd(p, v); }
  void storeu(double* p) const { _mm256_storeu_pd(p, v); }
  double get(int l) const {
    alignas(32) double t[4];
    _mm256_store_pd(t, v);
    return t[l];
  }
};

inline Avx2Vec add(Avx2Vec a, Avx2Vec b) { return {_mm256_add_pd(a.v, b.v)}; }
inline Avx2Vec mul(Avx2Vec a, Avx2Vec b) { return {_mm256_mul_pd(a.v, b.v)}; }
inline Avx2Vec fma(Avx2Vec a, Avx2Vec b, Avx2Vec c) { return {_mm256_fmadd_pd(a.v, b.v, c.v)}; }

template <unsigned Mask>
inline Avx2Vec blend(Avx2Vec a, Avx2Vec b) {
  return {_mm256_blend_pd(a.v, b.v, Mask & 0xF)};
}

template <int K>
inline Avx2Vec rotate_right(Avx2Vec a) {
  static_assert(K >= 0 && K < 4);
  constexpr int imm = ((0 - K + 4) % 4) | (((1 - K + 4) % 4) << 2) | (((2 - K + 4) % 4) << 4) | (((3 - K + 4) % 4) << 6);
  return {_mm256_permute4x64_pd(a.v, imm)};
}

template <int K>
inline Avx2Vec rotate_left(Avx2Vec a) {
  return rotate_right<(4 - K) % 4>(a);
}

template <Half A, Half B>
inline Avx2Vec half_exchange(Avx2Vec a, Avx2Vec b) {
  constexpr int imm = static_cast<int>(A) | ((2 + static_cast<int>(B)) << 4);
  return {_mm256_permute2f128_pd(a.v, b.v, imm)};
}

template <Parity P>
inline Avx2Vec interleave(Avx2Vec a, Avx2Vec b) {
  if constexpr (P == Parity::low) return {_mm256_unpacklo_pd(a.v, b.v)};
  else return {_mm256_unpackhi_pd(a.v, b.v)};
}

template <int G, Parity P>
inline Avx2Vec exchange(Avx2Vec a, Avx2Vec b) {
  static_assert(G == 1 || G == 2);
  if constexpr (G == 1) return interleave<P>(a, b);
  else return half_exchange<static_cast<Half>(P), static_cast<Half>(P)>(a, b);
}
#endif

// ---------------------------------------------------------------------------
// AVX-512, vl = 8
// ---------------------------------------------------------------------------

#if TSTENCIL_HAVE_AVX512
struct Avx512Vec {
  static constexpr int lanes = 8;
  __m512d v;

  static Avx512Vec load(const double* p) { return {_mm512_load_pd(p)}; }
  static Avx512Vec loadu(const double* p) { return {_mm512_loadu_pd(p)}; }
  static Avx512Vec broadcast(double s) { return {_mm512_set1_pd(s)}; }
  void store(double* p) const { _mm512_store_pd(p, v); }
  void storeu(double* p) const { _mm512_storeu_pd(p, v); }
  double get(int l) const {
    alignas(64) double t[8];
    _mm512_store_pd(t, v);
    return t[l];
  }
};

inline Avx512Vec add(Avx512Vec a, Avx512Vec b) { return {_mm512_add_pd(a.v, b.v)}; }
inline Avx512Vec mul(Avx512Vec a, Avx512Vec b) { return {_mm512_mul_pd(a.v, b.v)}; }
inline Avx512Vec fma(Avx512Vec a, Avx512Vec b, Avx512Vec c) { return {_mm512_fmadd_pd(a.v, b.v, c.v)}; }

template <unsigned Mask>
inline Avx512Vec blend(Avx512Vec a, Avx512Vec b) {
  return {_mm512_mask_blend_pd(static_cast<__mmask8>(Mask & 0xFF), a.v, b.v)};
}

template <int K>
inline Avx512Vec rotate_right(Avx512Vec a) {
  static_assert(K >= 0 && K < 8);
  if constexpr (K == 0) {
    return a;
  } else {
    const __m512i s = _mm512_castpd_si512(a.v);
    return {_mm512_castsi512_pd(_mm512_alignr_epi64(s, s, (8 - K) % 8))};
  }
}

template <int K>
inline Avx512Vec rotate_left(Avx512Vec a) {
  return rotate_right<(8 - K) % 8>(a);
}

template <Half A, Half B>
inline Avx512Vec half_exchange(Avx512Vec a, Avx512Vec b) {
  constexpr int sa = 2 * static_cast<int>(A), sb = 2 * static_cast<int>(B);
  constexpr int imm = sa | ((sa + 1) << 2) | (sb << 4) | ((sb + 1) << 6);
  return {_mm512_shuffle_f64x2(a.v, b.v, imm)};
}

template <Parity P>
inline Avx512Vec interleave(Avx512Vec a, Avx512Vec b) {
  if constexpr (P == Parity::low) return {_mm512_unpacklo_pd(a.v, b.v)};
  else return {_mm512_unpackhi_pd(a.v, b.v)};
}

template <int G, Parity P>
inline Avx512Vec exchange(Avx512Vec a, Avx512Vec b) {
  static_assert(G == 1 || G == 2 || G == 4);
  if constexpr (G == 1) {
    return interleave<P>(a, b);
  } else if constexpr (G == 4) {
    return half_exchange<static_cast<Half>(P), static_cast<Half>(P)>(a, b);
  } else {
    // Two-source permute; indices 8..15 select from b.
    constexpr int s = P == Parity::high ? 2 : 0;
    const __m512i idx = _mm512_setr_epi64(0 + s, 1 + s, 8 + s, 9 + s, 4 + s, 5 + s, 12 + s, 13 + s);
    return {_mm512_permutex2var_pd(a.v, idx, b.v)};
  }
}
#endif

// ---------------------------------------------------------------------------
// Preferred type per vector length
// ---------------------------------------------------------------------------

template <int VL>
struct NativeSelect {
  using type = PortableVec<VL>;
};
#if TSTENCIL_HAVE_AVX2
template <>
struct NativeSelect<4> {
  using type = Avx2Vec;
};
#endif
#if TSTENCIL_HAVE_AVX512
template <>
struct NativeSelect<8> {
  using type = Avx512Vec;
};
#endif

template <int VL>
using Vec = typename NativeSelect<VL>::type;

/// Whether Vec<vl> is bound to hardware vector instructions.
constexpr bool has_native(int vl) {
  if (vl == 4) return TSTENCIL_HAVE_AVX2 != 0;
  if (vl == 8) return TSTENCIL_HAVE_AVX512 != 0;
  return false;
}

template <class V>
inline std::array<double, V::lanes> to_array(V v) {
  alignas(64) std::array<double, V::lanes> out{};
  v.storeu(out.data());
  return out;
}

template <class V>
inline V from_array(const std::array<double, V::lanes>& a) {
  return V::loadu(a.data());
}

/// Latency class of an exchange at granularity G lanes (128-bit lanes hold
/// two doubles, so anything moving more than one lane crosses them).
constexpr LatencyClass exchange_class(int granularity) {
  return granularity > 1 ? LatencyClass::cross_lane : LatencyClass::in_lane;
}

}  // namespace tstencil::simd
