#include "facepipe/error.hpp"

namespace facepipe {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::file_not_found: return "FileNotFound";
    case Errc::unsupported_format: return "UnsupportedFormat";
    case Errc::corrupt_header: return "CorruptHeader";
    case Errc::degenerate_eyes: return "DegenerateEyes";
    case Errc::kernel_larger_than_image: return "KernelLargerThanImage";
    case Errc::empty_class: return "EmptyClass";
    case Errc::single_class: return "SingleClass";
    case Errc::rank_deficient: return "RankDeficient";
    case Errc::target_too_large: return "TargetTooLarge";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::no_convergence: return "NoConvergence";
    case Errc::non_linear_kernel: return "NonLinearKernel";
    case Errc::zero_vector: return "ZeroVector";
    case Errc::unknown_subject: return "UnknownSubject";
    case Errc::empty_scores: return "EmptyScores";
    case Errc::empty_dataset: return "EmptyDataset";
    case Errc::missing_view_tags: return "MissingViewTags";
    case Errc::insufficient_images: return "InsufficientImages";
    case Errc::version_mismatch: return "VersionMismatch";
    case Errc::corrupt_file: return "CorruptFile";
    case Errc::io_error: return "IoError";
    case Errc::invalid_argument: return "InvalidArgument";
  }
  return "UnknownError";
}

}  // namespace facepipe
