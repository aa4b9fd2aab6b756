#include "cryoreduce/image.hpp"

#include <cmath>

#include "cryoreduce/errors.hpp"

namespace cryoreduce {

void validate_image(const ImageRecord& img) {
    if (img.width < 1 || img.height < 1)
        throw ValidationError("image '" + img.id + "' has empty dimensions");
    if (img.pixels.size() != img.width * img.height)
        throw ValidationError("image '" + img.id + "' pixel count " +
                              std::to_string(img.pixels.size()) + " != width*height");
    for (double v : img.pixels) {
        if (!std::isfinite(v))
            throw ValidationError("image '" + img.id + "' contains non-finite pixels");
    }
}

std::vector<double> image_to_vector(const ImageRecord& img) {
    validate_image(img);
    return img.pixels;  // already stored row-major
}

}  // namespace cryoreduce
