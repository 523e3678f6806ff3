#ifndef MANN_FEATURES2D_HPP
#define MANN_FEATURES2D_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mann/errors.hpp"
#include "mann/matrix.hpp"

namespace mann {

/// The four presentation spaces an image is projected to.
enum class Orientation { Column = 0, Row = 1, Diagonal = 2, Block = 3 };

constexpr std::array<Orientation, 4> all_orientations{
    Orientation::Column, Orientation::Row, Orientation::Diagonal, Orientation::Block};

inline std::string orientation_name(Orientation o) {
    switch (o) {
        case Orientation::Column: return "column";
        case Orientation::Row: return "row";
        case Orientation::Diagonal: return "diagonal";
        case Orientation::Block: return "block";
    }
    return "?";
}

inline Orientation orientation_from_name(const std::string& name) {
    for (Orientation o : all_orientations)
        if (orientation_name(o) == name) return o;
    throw config_error("unknown orientation name: " + name);
}

using BlockGrid = std::pair<std::size_t, std::size_t>;

/// Fitted 2D-PCA model for one orientation.
struct ProjectionBasis {
    Orientation orientation = Orientation::Column;
    Matrix mean;                     // average pre-transformed training image
    Matrix axes;                     // n_eff x d, columns orthonormal
    std::vector<double> eigenvalues; // length d, non-increasing
    std::size_t d = 0;
    std::optional<BlockGrid> block_grid; // present only for Block
};

struct FeatureVector {
    Orientation orientation = Orientation::Column;
    std::vector<double> values; // rows_eff x d, row-major
};

/// One feature vector per presentation space, indexed by Orientation.
struct FeatureSet {
    std::array<FeatureVector, 4> v;

    const FeatureVector& operator[](Orientation o) const {
        return v[static_cast<std::size_t>(o)];
    }
    FeatureVector& operator[](Orientation o) {
        return v[static_cast<std::size_t>(o)];
    }
};

inline Matrix mean_image(const std::vector<Matrix>& images) {
    if (images.empty())
        throw data_error("mean_image: empty image set");
    Matrix acc(images[0].rows(), images[0].cols());
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (!images[i].same_shape(acc))
            throw shape_error("mean_image: image " + std::to_string(i) + " has shape " +
                              images[i].shape() + ", expected " + acc.shape());
        acc = mat_add(acc, images[i]);
    }
    return mat_scale(acc, 1.0 / static_cast<double>(images.size()));
}

/// Image covariance C = (1/N) sum (X_i - mean)^T (X_i - mean).
/// Result is symmetrized so C == C^T exactly.
inline Matrix image_covariance(const std::vector<Matrix>& images, const Matrix& mean) {
    if (images.empty())
        throw data_error("image_covariance: empty image set");
    const std::size_t n = mean.cols();
    Matrix c(n, n);
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (!images[i].same_shape(mean))
            throw shape_error("image_covariance: image " + std::to_string(i) +
                              " has shape " + images[i].shape() + ", expected " +
                              mean.shape());
        const Matrix dev = mat_sub(images[i], mean);
        c = mat_add(c, mat_mul(transpose(dev), dev));
    }
    c = mat_scale(c, 1.0 / static_cast<double>(images.size()));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (c(i, j) + c(j, i));
            c(i, j) = v;
            c(j, i) = v;
        }
    return c;
}

/// Diagonal image: row i cyclically left-shifted by i when rows <= cols,
/// column j cyclically up-shifted by j otherwise.
inline Matrix diagonal_image(const Matrix& image) {
    const std::size_t r = image.rows(), c = image.cols();
    Matrix out(r, c);
    if (r <= c) {
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j)
                out(i, j) = image(i, (i + j) % c);
    } else {
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j)
                out(i, j) = image((i + j) % r, j);
    }
    return out;
}

/// Inverse of diagonal_image (shift right / down).
inline Matrix diagonal_image_inverse(const Matrix& image) {
    const std::size_t r = image.rows(), c = image.cols();
    Matrix out(r, c);
    if (r <= c) {
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j)
                out(i, (i + j) % c) = image(i, j);
    } else {
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j)
                out((i + j) % r, j) = image(i, j);
    }
    return out;
}

/// Partition into g_r x g_c equal blocks (row-major block order) and
/// stack the blocks vertically: (rows*g_c) x (cols/g_c).
inline Matrix block_rearrange(const Matrix& image, BlockGrid grid) {
    const auto [gr, gc] = grid;
    if (gr == 0 || gc == 0 || image.rows() % gr != 0 || image.cols() % gc != 0)
        throw parameter_error("block_rearrange: grid " + std::to_string(gr) + "x" +
                              std::to_string(gc) + " does not divide image " +
                              image.shape());
    const std::size_t br = image.rows() / gr; // block height
    const std::size_t bc = image.cols() / gc; // block width
    Matrix out(image.rows() * gc, bc);
    std::size_t row_out = 0;
    for (std::size_t bi = 0; bi < gr; ++bi)
        for (std::size_t bj = 0; bj < gc; ++bj)
            for (std::size_t i = 0; i < br; ++i, ++row_out)
                for (std::size_t j = 0; j < bc; ++j)
                    out(row_out, j) = image(bi * br + i, bj * bc + j);
    return out;
}

/// Inverse of block_rearrange for the original shape.
inline Matrix block_restore(const Matrix& stacked, BlockGrid grid,
                            std::size_t rows, std::size_t cols) {
    const auto [gr, gc] = grid;
    if (gr == 0 || gc == 0 || rows % gr != 0 || cols % gc != 0 ||
        stacked.rows() != rows * gc || stacked.cols() != cols / gc)
        throw parameter_error("block_restore: grid/shape mismatch for " +
                              stacked.shape());
    const std::size_t br = rows / gr;
    const std::size_t bc = cols / gc;
    Matrix out(rows, cols);
    std::size_t row_in = 0;
    for (std::size_t bi = 0; bi < gr; ++bi)
        for (std::size_t bj = 0; bj < gc; ++bj)
            for (std::size_t i = 0; i < br; ++i, ++row_in)
                for (std::size_t j = 0; j < bc; ++j)
                    out(bi * br + i, bj * bc + j) = stacked(row_in, j);
    return out;
}

inline Matrix apply_pre_transform(const Matrix& image, Orientation o,
                                  std::optional<BlockGrid> grid = std::nullopt) {
    switch (o) {
        case Orientation::Column: return image;
        case Orientation::Row: return transpose(image);
        case Orientation::Diagonal: return diagonal_image(image);
        case Orientation::Block:
            if (!grid) throw config_error("block orientation requires a block grid");
            return block_rearrange(image, *grid);
    }
    throw config_error("invalid orientation");
}

inline Matrix invert_pre_transform(const Matrix& transformed, Orientation o,
                                   std::optional<BlockGrid> grid,
                                   std::size_t orig_rows, std::size_t orig_cols) {
    switch (o) {
        case Orientation::Column: return transformed;
        case Orientation::Row: return transpose(transformed);
        case Orientation::Diagonal: return diagonal_image_inverse(transformed);
        case Orientation::Block:
            if (!grid) throw config_error("block orientation requires a block grid");
            return block_restore(transformed, *grid, orig_rows, orig_cols);
    }
    throw config_error("invalid orientation");
}

inline ProjectionBasis fit_2dpca(const std::vector<Matrix>& images, std::size_t d,
                                 Orientation orientation,
                                 std::optional<BlockGrid> block_grid = std::nullopt) {
    if (images.empty())
        throw data_error("fit_2dpca: empty image set");
    if (orientation != Orientation::Block) block_grid.reset();

    std::vector<Matrix> pre;
    pre.reserve(images.size());
    for (const Matrix& img : images)
        pre.push_back(apply_pre_transform(img, orientation, block_grid));

    const std::size_t n_eff = pre[0].cols();
    if (d < 1 || d > n_eff)
        throw parameter_error("fit_2dpca: d = " + std::to_string(d) +
                              " out of range [1, " + std::to_string(n_eff) + "]");

    ProjectionBasis basis;
    basis.orientation = orientation;
    basis.block_grid = block_grid;
    basis.d = d;
    basis.mean = mean_image(pre);
    const Matrix cov = image_covariance(pre, basis.mean);
    const EigenDecomposition eig = jacobi_eigh(cov);

    basis.axes = Matrix(n_eff, d);
    basis.eigenvalues.assign(eig.values.begin(), eig.values.begin() + d);
    for (std::size_t i = 0; i < n_eff; ++i)
        for (std::size_t j = 0; j < d; ++j)
            basis.axes(i, j) = eig.vectors(i, j);
    return basis;
}

inline FeatureVector project_2dpca(const Matrix& image, const ProjectionBasis& basis) {
    const Matrix a = apply_pre_transform(image, basis.orientation, basis.block_grid);
    if (a.cols() != basis.axes.rows())
        throw shape_error("project_2dpca: image gives " + a.shape() +
                          " after pre-transform, basis expects " +
                          std::to_string(basis.axes.rows()) + " columns");
    const Matrix f = mat_mul(a, basis.axes);
    FeatureVector fv;
    fv.orientation = basis.orientation;
    fv.values = f.data();
    return fv;
}

inline Matrix reconstruct(const FeatureVector& feature, const ProjectionBasis& basis,
                          std::size_t orig_rows, std::size_t orig_cols) {
    if (basis.d == 0 || feature.values.size() % basis.d != 0)
        throw shape_error("reconstruct: feature length " +
                          std::to_string(feature.values.size()) +
                          " not a multiple of d = " + std::to_string(basis.d));
    const std::size_t rows_eff = feature.values.size() / basis.d;
    const Matrix f(rows_eff, basis.d, feature.values);
    const Matrix a_rec = mat_mul(f, transpose(basis.axes));
    return invert_pre_transform(a_rec, basis.orientation, basis.block_grid,
                                orig_rows, orig_cols);
}

/// Project one image to all four presentation spaces.
inline FeatureSet extract_feature_set(const Matrix& image,
                                      const std::array<ProjectionBasis, 4>& bases) {
    std::array<bool, 4> seen{};
    for (const ProjectionBasis& b : bases) {
        auto& flag = seen[static_cast<std::size_t>(b.orientation)];
        if (flag)
            throw config_error("extract_feature_set: duplicate orientation " +
                               orientation_name(b.orientation));
        flag = true;
    }
    FeatureSet fs;
    for (const ProjectionBasis& b : bases)
        fs[b.orientation] = project_2dpca(image, b);
    return fs;
}

} // namespace mann

#endif
