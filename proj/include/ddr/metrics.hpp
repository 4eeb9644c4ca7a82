#pragma once

#include <cmath>
#include <vector>

#include "ddr/image_io.hpp"

namespace ddr {

// 10 log10(1 / MSE) over all channels, capped at 99 dB for identical images.
inline double psnr(const ImageRGB& img, const ImageRGB& ref) {
  require(img.width == ref.width && img.height == ref.height, "psnr: shape mismatch");
  require(img.width > 0, "psnr: empty image");
  double mse = 0.0;
  for (size_t i = 0; i < img.pixels.size(); ++i)
    mse += (img.pixels[i] - ref.pixels[i]).squaredNorm();
  mse /= static_cast<double>(img.pixels.size() * 3);
  const double db = -10.0 * std::log10(std::max(mse, 1e-300));
  return std::min(db, 99.0);
}

namespace metrics_detail {
// Luminance (Rec. 601 weights) for the grayscale SSIM input.
inline ImageGray luminance(const ImageRGB& img) {
  ImageGray g(img.width, img.height);
  for (size_t i = 0; i < img.pixels.size(); ++i)
    g.pixels[i] = 0.299 * img.pixels[i].x() + 0.587 * img.pixels[i].y() +
                  0.114 * img.pixels[i].z();
  return g;
}

inline std::vector<double> gaussian_kernel(int radius, double sigma) {
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable valid-region Gaussian filter.
inline ImageGray blur(const ImageGray& in, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size()) / 2;
  ImageGray tmp(in.width, in.height);
  for (int y = 0; y < in.height; ++y)
    for (int x = r; x < in.width - r; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += k[i + r] * in.at(x + i, y);
      tmp.at(x, y) = s;
    }
  ImageGray out(in.width, in.height);
  for (int y = r; y < in.height - r; ++y)
    for (int x = 0; x < in.width; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += k[i + r] * tmp.at(x, y + i);
      out.at(x, y) = s;
    }
  return out;
}
}  // namespace metrics_detail

// Mean windowed SSIM on luminance: 11x11 Gaussian window (sigma 1.5),
// k1 = 0.01, k2 = 0.03, dynamic range 1.
inline double ssim(const ImageRGB& img, const ImageRGB& ref) {
  require(img.width == ref.width && img.height == ref.height, "ssim: shape mismatch");
  const int radius = 5;
  require(img.width >= 2 * radius + 1 && img.height >= 2 * radius + 1,
          "ssim: image smaller than the 11x11 window");
  using namespace metrics_detail;
  const std::vector<double> k = gaussian_kernel(radius, 1.5);
  const ImageGray a = luminance(img);
  const ImageGray b = luminance(ref);
  ImageGray aa(a.width, a.height), bb(a.width, a.height), ab(a.width, a.height);
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    aa.pixels[i] = a.pixels[i] * a.pixels[i];
    bb.pixels[i] = b.pixels[i] * b.pixels[i];
    ab.pixels[i] = a.pixels[i] * b.pixels[i];
  }
  const ImageGray mu_a = blur(a, k), mu_b = blur(b, k);
  const ImageGray m_aa = blur(aa, k), m_bb = blur(bb, k), m_ab = blur(ab, k);
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0.0;
  size_t count = 0;
  for (int y = radius; y < a.height - radius; ++y)
    for (int x = radius; x < a.width - radius; ++x) {
      const double ma = mu_a.at(x, y), mb = mu_b.at(x, y);
      const double va = m_aa.at(x, y) - ma * ma;
      const double vb = m_bb.at(x, y) - mb * mb;
      const double cov = m_ab.at(x, y) - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return total / static_cast<double>(count);
}

// Mean absolute 5-point Laplacian over interior pixels; a roughness score
// for rendered depth maps.
inline double mean_abs_laplacian(const ImageGray& img) {
  require(img.width >= 3 && img.height >= 3, "mean_abs_laplacian: image too small");
  double total = 0.0;
  size_t count = 0;
  for (int y = 1; y < img.height - 1; ++y)
    for (int x = 1; x < img.width - 1; ++x) {
      total += std::abs(img.at(x - 1, y) + img.at(x + 1, y) + img.at(x, y - 1) +
                        img.at(x, y + 1) - 4.0 * img.at(x, y));
      ++count;
    }
  return total / static_cast<double>(count);
}

}  // namespace ddr
