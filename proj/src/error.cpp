#include "convoy/error.hpp"

namespace convoy {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::Domain: return "domain error";
    case ErrorCode::Config: return "configuration error";
    case ErrorCode::Shape: return "shape error";
    case ErrorCode::Protocol: return "protocol-state error";
    case ErrorCode::Membership: return "membership error";
    case ErrorCode::Geometry: return "geometry error";
    case ErrorCode::Numerical: return "numerical error";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Refused: return "refused";
  }
  return "unknown error";
}

}  // namespace convoy
