#pragma once

// The tensor engine and everything built on it (generator, loss, optimizer)
// is compiled once per scalar type. Production code uses float; the
// finite-difference suites link the double build. The inline namespace keeps
// the two builds link-distinct, so mixing them is a link error, not an ODR bug.
#ifdef CBCT_REAL_DOUBLE
#define CBCT_REAL_NS f64
#else
#define CBCT_REAL_NS f32
#endif

namespace cbct::inline CBCT_REAL_NS::ad {

#ifdef CBCT_REAL_DOUBLE
using real = double;
#else
using real = float;
#endif

}  // namespace cbct::inline CBCT_REAL_NS::ad
