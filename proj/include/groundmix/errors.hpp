#pragma once

#include <stdexcept>
#include <string>

namespace groundmix {

/// Base class for every error raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- geometry ---
struct NonPositiveDepth : Error { using Error::Error; };
struct RayParallelToPlane : Error { using Error::Error; };
struct IntersectionBehindCamera : Error { using Error::Error; };
struct DegenerateInput : Error { using Error::Error; };
struct ZeroCenter : Error { using Error::Error; };

// --- dataset ---
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct MissingPlane : Error { using Error::Error; };

// --- plane fitting ---
struct TooFewPoints : Error { using Error::Error; };
struct DegenerateGeometry : Error { using Error::Error; };

// --- patch bank ---
struct RejectedIntrusion : Error { using Error::Error; };
struct RejectedDegenerate : Error { using Error::Error; };
struct UnknownUid : Error { using Error::Error; };
struct EmptyBank : Error { using Error::Error; };

// --- augmentation ---
struct NonPositiveArgument : Error { using Error::Error; };
struct DegenerateDims : Error { using Error::Error; };
struct GeometryMismatch : Error { using Error::Error; };

}  // namespace groundmix
