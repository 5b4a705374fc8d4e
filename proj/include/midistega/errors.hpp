#ifndef MIDISTEGA_ERRORS_HPP
#define MIDISTEGA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace midistega {

// Base class for every data/format error raised by the library. The CLI maps
// these to exit code 2; usage errors stay with the argument parser.
struct StegaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// midi-io
struct MalformedMidi : StegaError {
    using StegaError::StegaError;
};
struct UnsupportedFormat : StegaError {
    using StegaError::StegaError;
};
struct DirectoryNotFound : StegaError {
    using StegaError::StegaError;
};

// model files
struct EmptyCorpus : StegaError {
    using StegaError::StegaError;
};
struct BadMagic : StegaError {
    using StegaError::StegaError;
};
struct VersionMismatch : StegaError {
    using StegaError::StegaError;
};
struct TruncatedFile : StegaError {
    using StegaError::StegaError;
};

// neural evaluation
struct DimensionMismatch : StegaError {
    using StegaError::StegaError;
};
struct EmptyHistory : StegaError {
    using StegaError::StegaError;
};

// codec
struct PayloadTooLarge : StegaError {
    using StegaError::StegaError;
};
struct TruncatedFrame : StegaError {
    using StegaError::StegaError;
};
struct NonByteAlignedLength : StegaError {
    using StegaError::StegaError;
};
struct PoolTooSmall : StegaError {
    using StegaError::StegaError;
};
struct DesyncDetected : StegaError {
    using StegaError::StegaError;
};

// evaluation
struct SequenceTooShort : StegaError {
    using StegaError::StegaError;
};
struct EmptyInput : StegaError {
    using StegaError::StegaError;
};

}  // namespace midistega

#endif
