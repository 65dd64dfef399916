#include "qgends/error.hpp"

namespace qgends {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::InvariantError: return "InvariantError";
    case ErrorKind::NonPositiveLength: return "NonPositiveLength";
    case ErrorKind::DepthTooLarge: return "DepthTooLarge";
    case ErrorKind::UnknownVertex: return "UnknownVertex";
    case ErrorKind::UnsupportedFamily: return "UnsupportedFamily";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::InfiniteVolumeRegime: return "InfiniteVolumeRegime";
    case ErrorKind::NoLimit: return "NoLimit";
    case ErrorKind::RootScanTooCoarse: return "RootScanTooCoarse";
    case ErrorKind::SingularAssembly: return "SingularAssembly";
    case ErrorKind::NoFiniteVolumeEnd: return "NoFiniteVolumeEnd";
    case ErrorKind::ZeroFunction: return "ZeroFunction";
    case ErrorKind::NoQualifyingSequence: return "NoQualifyingSequence";
    case ErrorKind::ShootingFailure: return "ShootingFailure";
  }
  return "Error";
}

}  // namespace qgends
