#include "mdids/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "mdids/error.hpp"

namespace mdids {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    std::size_t cols = rows.empty() ? 0 : rows.front().size();
    Matrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) throw ContractError("ragged matrix rows");
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

std::vector<double> Matrix::column(std::size_t j) const {
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
    std::vector<std::vector<double>> out(rows_, std::vector<double>(cols_));
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) out[i][j] = (*this)(i, j);
    return out;
}

double Matrix::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
}

Matrix covariance_matrix(const Dataset& standardized) {
    const std::size_t n = standardized.columns();
    const std::size_t rows = standardized.size();
    if (rows < 2) throw InsufficientDataError("covariance needs at least 2 observations");
    for (std::size_t j = 0; j < n; ++j) {
        double mean = column_mean(standardized.column(j));
        if (std::abs(mean) > 1e-6)
            throw ContractError(fmt::format("column '{}' is not centered (mean {})", standardized.names()[j], mean));
    }
    Matrix c(n, n);
    for (const auto& obs : standardized.observations()) {
        const auto& x = obs.features;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) c(i, j) += x[i] * x[j];
    }
    const double scale = 1.0 / static_cast<double>(rows - 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            c(i, j) *= scale;
            c(j, i) = c(i, j);
        }
    }
    return c;
}

namespace {

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

// One Jacobi rotation zeroing a(p,q); accumulates the rotation into v.
void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
    const double apq = a(p, q);
    if (apq == 0.0) return;
    const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
    const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = t * c;
    const std::size_t n = a.rows();
    for (std::size_t k = 0; k < n; ++k) {
        const double akp = a(k, p);
        const double akq = a(k, q);
        a(k, p) = c * akp - s * akq;
        a(k, q) = s * akp + c * akq;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double apk = a(p, k);
        const double aqk = a(q, k);
        a(p, k) = c * apk - s * aqk;
        a(q, k) = s * apk + c * aqk;
    }
    a(p, q) = 0.0;
    a(q, p) = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double vkp = v(k, p);
        const double vkq = v(k, q);
        v(k, p) = c * vkp - s * vkq;
        v(k, q) = s * vkp + c * vkq;
    }
}

void fix_sign(std::vector<double>& vec) {
    double largest = 0.0;
    for (double x : vec) largest = std::max(largest, std::abs(x));
    for (double x : vec) {
        // first component within rounding of the largest magnitude decides
        if (std::abs(x) >= largest - 1e-9) {
            if (x < 0.0)
                for (double& y : vec) y = -y;
            return;
        }
    }
}

}  // namespace

std::vector<EigenPair> eigen_decompose(const Matrix& symmetric, double tolerance, int max_sweeps) {
    const std::size_t n = symmetric.rows();
    if (n == 0 || symmetric.cols() != n) throw ContractError("eigen_decompose needs a non-empty square matrix");
    double largest = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(symmetric(i, j))) throw ContractError("matrix has non-finite entries");
            largest = std::max(largest, std::abs(symmetric(i, j)));
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(symmetric(i, j) - symmetric(j, i)) > 1e-10 * std::max(1.0, largest))
                throw ContractError(fmt::format("matrix is not symmetric at ({}, {})", i, j));

    Matrix a = symmetric;
    Matrix v = Matrix::identity(n);
    const double target = tolerance * std::max(1.0, frobenius_norm(symmetric));
    bool converged = off_diagonal_norm(a) <= target;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) rotate(a, v, p, q);
        converged = off_diagonal_norm(a) <= target;
    }
    if (!converged)
        throw NumericError(fmt::format("Jacobi iteration did not converge in {} sweeps (off-diagonal residual {})",
                                       max_sweeps, off_diagonal_norm(a)));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return a(x, x) > a(y, y); });
    std::vector<EigenPair> pairs;
    pairs.reserve(n);
    for (auto k : order) {
        EigenPair pair{a(k, k), v.column(k)};
        fix_sign(pair.vector);
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

VariabilityTable variability_table(std::span<const EigenPair> eigenpairs) {
    if (eigenpairs.empty()) throw ContractError("variability table needs at least one eigenpair");
    double total = 0.0;
    for (const auto& p : eigenpairs) total += p.value;
    if (!(total > 0.0)) throw DegenerateDataError("all eigenvalues are zero");
    VariabilityTable table;
    double running = 0.0;
    for (std::size_t k = 0; k < eigenpairs.size(); ++k) {
        double percent = 100.0 * eigenpairs[k].value / total;
        running += percent;
        table.push_back({k + 1, eigenpairs[k].value, percent, running});
    }
    return table;
}

std::size_t select_components(std::span<const EigenPair> eigenpairs, double threshold_percent) {
    if (!(threshold_percent > 0.0 && threshold_percent <= 100.0))
        throw ArgumentError(fmt::format("variability threshold {} outside (0, 100]", threshold_percent));
    auto table = variability_table(eigenpairs);
    for (const auto& row : table)
        if (row.cumulative >= threshold_percent - 1e-9) return row.component;
    return table.size();
}

PcaModel fit_pca(const Dataset& raw, double threshold_percent, const std::string& component_prefix) {
    auto [data, params] = standardize(raw);
    PcaModel model;
    model.standardization = std::move(params);
    model.eigenpairs = eigen_decompose(covariance_matrix(data));
    model.selected_p = select_components(model.eigenpairs, threshold_percent);
    const std::size_t n = model.eigenpairs.size();
    model.feature_matrix = Matrix(n, model.selected_p);
    for (std::size_t k = 0; k < model.selected_p; ++k) {
        for (std::size_t i = 0; i < n; ++i) model.feature_matrix(i, k) = model.eigenpairs[k].vector[i];
        model.component_names.push_back(fmt::format("{}{}", component_prefix, k + 1));
    }
    return model;
}

std::vector<double> project(const PcaModel& model, std::span<const double> raw) {
    const auto& std_params = model.standardization;
    if (raw.size() != std_params.source_names.size())
        throw ContractError(fmt::format("projection expects {} raw features, got {}", std_params.source_names.size(),
                                        raw.size()));
    auto z = std_params.apply(raw);
    std::vector<double> out(model.selected_p, 0.0);
    for (std::size_t k = 0; k < model.selected_p; ++k)
        for (std::size_t i = 0; i < z.size(); ++i) out[k] += z[i] * model.feature_matrix(i, k);
    return out;
}

Dataset project(const PcaModel& model, const Dataset& raw) {
    if (raw.columns() != model.standardization.source_names.size())
        throw ContractError(fmt::format("projection expects {} columns, got {}",
                                        model.standardization.source_names.size(), raw.columns()));
    std::vector<LabeledObservation> rows;
    rows.reserve(raw.size());
    for (const auto& obs : raw.observations()) rows.push_back({obs.window_start, project(model, obs.features), obs.label});
    return Dataset(model.component_names, std::move(rows), raw.label_kind());
}

}  // namespace mdids
