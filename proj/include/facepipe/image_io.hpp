#ifndef FACEPIPE_IMAGE_IO_HPP_
#define FACEPIPE_IMAGE_IO_HPP_

#include <filesystem>

#include "facepipe/image.hpp"

namespace facepipe::io {

/// Loads a binary PGM (P5, maxval <= 255) or an 8-bit grayscale PNG.
/// The format is sniffed from the file content, not the extension.
Image load_image(const std::filesystem::path& path);

/// Writes a binary P5 PGM with maxval 255. load_image(save_pgm(img)) is bit-exact.
void save_pgm(const Image& img, const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG. Used by tests and the preprocess CLI.
void save_png(const Image& img, const std::filesystem::path& path);

}  // namespace facepipe::io

#endif  // FACEPIPE_IMAGE_IO_HPP_
