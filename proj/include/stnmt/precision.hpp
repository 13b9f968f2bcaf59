#pragma once

// The numeric core is compiled twice: 32-bit for training and decoding,
// 64-bit (STNMT_DOUBLE) for gradient verification. Each build lives in its
// own inline namespace so both libraries can be linked into one binary.

#if defined(STNMT_DOUBLE)
#define STNMT_PRECISION_NS f64
#else
#define STNMT_PRECISION_NS f32
#endif

#define STNMT_BEGIN_NAMESPACE \
  namespace stnmt {           \
  inline namespace STNMT_PRECISION_NS {
#define STNMT_END_NAMESPACE \
  }                         \
  }

STNMT_BEGIN_NAMESPACE

#if defined(STNMT_DOUBLE)
using Real = double;
inline constexpr bool kDoublePrecision = true;
#else
using Real = float;
inline constexpr bool kDoublePrecision = false;
#endif

STNMT_END_NAMESPACE
