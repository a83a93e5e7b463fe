#pragma once

#include "flowmotion/flow_field.hpp"
#include "flowmotion/image.hpp"

namespace flowmotion {

struct HsConfig {
    double alpha = 15.0;     // smoothness weight, 8-bit intensity units
    int iterations = 100;    // Jacobi sweeps per pyramid level
    int pyramid_levels = 3;

    void validate() const;
};

struct Gradients {
    GrayImage ix;
    GrayImage iy;
    GrayImage it;
};

// Central differences averaged over the pair for Ix/Iy (one-sided at the
// borders), It = img2 - img1.
Gradients image_gradients(const GrayImage& img1, const GrayImage& img2);

// Coarse-to-fine Horn-Schunck. At each level the second image is warped by
// the upsampled flow and the Jacobi update
//   du <- mean(du) - Ix * (Ix*mean(du) + Iy*mean(dv) + It) / (alpha^2 + Ix^2 + Iy^2)
// is iterated for the residual; between levels the flow is upsampled x2
// with its values doubled. Gradients are computed on a 0-255 intensity
// scale so alpha stays in conventional 8-bit units.
FlowField estimate_flow(const GrayImage& img1, const GrayImage& img2, const HsConfig& cfg = {});

}  // namespace flowmotion
