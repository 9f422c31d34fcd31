#pragma once

#include <string>

#include "flare/image.hpp"

namespace flare {

// Reads an 8-bit PNG (gray/RGB; palette expanded, alpha stripped) or binary
// PPM/PGM. Samples map to [0,1]; gamma_decode additionally applies x^2.2 to
// convert display-encoded files to linear light.
ImageBuffer load_image(const std::string& path, bool gamma_decode = false);

// Writes PNG or PPM/PGM by extension (.png/.ppm/.pgm). Values are clamped to
// [0,1] and quantized to 8 bits; gamma_encode applies x^(1/2.2) first.
void save_image(const ImageBuffer& img, const std::string& path,
                bool gamma_encode = false);

// Mask I/O: 0/255 8-bit gray PNG.
void save_mask(const Mask& m, const std::string& path);
Mask load_mask(const std::string& path);

}  // namespace flare
