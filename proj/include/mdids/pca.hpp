#pragma once

// Dimension selection: correlation matrix, Jacobi eigen-decomposition,
// variability (scree) table, component selection and projection.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mdids/dataset.hpp"

namespace mdids {

/// Dense row-major matrix, sized for the handful of parameters a detector
/// works with.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

    static Matrix identity(std::size_t n);
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::vector<double> column(std::size_t j) const;
    std::vector<std::vector<double>> to_rows() const;
    double trace() const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct EigenPair {
    double value = 0.0;
    std::vector<double> vector;  // unit length

    bool operator==(const EigenPair&) const = default;
};

/// C = X^T X / (N-1) for a standardized dataset (a correlation matrix).
/// Throws ContractError if a column mean is further than 1e-6 from zero.
Matrix covariance_matrix(const Dataset& standardized);

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops to
/// `tolerance * max(1, |A|_F)`. Pairs come back sorted by descending
/// eigenvalue (ties keep column order) and each vector is signed so its
/// largest-magnitude component is positive.
std::vector<EigenPair> eigen_decompose(const Matrix& symmetric, double tolerance = 1e-10, int max_sweeps = 100);

struct VariabilityRow {
    std::size_t component = 0;  // 1-based
    double eigenvalue = 0.0;
    double percent = 0.0;
    double cumulative = 0.0;
};

using VariabilityTable = std::vector<VariabilityRow>;

VariabilityTable variability_table(std::span<const EigenPair> eigenpairs);

/// Smallest p whose cumulative variability reaches `threshold_percent`.
std::size_t select_components(std::span<const EigenPair> eigenpairs, double threshold_percent);

struct PcaModel {
    StandardizationParams standardization;
    std::vector<EigenPair> eigenpairs;
    std::size_t selected_p = 0;
    Matrix feature_matrix;                     // n x p, columns are the top-p eigenvectors
    std::vector<std::string> component_names;  // one per retained component

    bool operator==(const PcaModel&) const = default;
};

inline constexpr double kDefaultVariabilityThreshold = 75.0;

/// Full pipeline on raw (unstandardized) observations.
PcaModel fit_pca(const Dataset& raw, double threshold_percent = kDefaultVariabilityThreshold,
                 const std::string& component_prefix = "F");

/// ((x - means) / stddevs) * feature_matrix for one raw observation of the
/// model's source width.
std::vector<double> project(const PcaModel& model, std::span<const double> raw);

/// Projects every observation; labels and window starts pass through.
Dataset project(const PcaModel& model, const Dataset& raw);

}  // namespace mdids
