#include "ncgs/quant.hpp"

#include "ncgs/error.hpp"

namespace ncgs {

void QuantSpec::validate() const {
  if (bits < 1 || bits > 24) fail(ErrorCode::kInvalidArgument, "quantizer bit depth must lie in [1, 24]");
  if (!(a < b)) fail(ErrorCode::kInvalidArgument, "quantizer interval requires a < b");
}

}  // namespace ncgs
