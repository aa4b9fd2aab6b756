#ifndef CRYOREDUCE_IMAGE_HPP
#define CRYOREDUCE_IMAGE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace cryoreduce {

// One micrograph (or one movie frame). Pixels are stored row-major,
// height x width, already converted to double.
struct ImageRecord {
    std::string id;
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> pixels;       // height * width values, row-major
    std::string source;               // originating file
    std::int64_t frame = 0;           // frame index within the source
    std::int64_t source_bytes = 0;    // bytes this frame occupied at the source

    double at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
    std::size_t pixel_count() const { return width * height; }
};

// Checks the ImageRecord invariants: positive dimensions, matching pixel
// count, all values finite. Throws ValidationError.
void validate_image(const ImageRecord& img);

// Row-major flattening of the pixel raster into a vector of length
// width * height: vector[r * width + c] = pixels(r, c).
std::vector<double> image_to_vector(const ImageRecord& img);

}  // namespace cryoreduce

#endif
