#include "floodcast/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "floodcast/series.hpp"

namespace floodcast {

std::string measure_name(Measure m) { return m == Measure::Range ? "range" : "std"; }

double measure_range(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("measure_range: empty set");
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return *hi - *lo;
}

double measure_std(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("measure_std: empty set");
    double m = 0.0;
    for (double v : values) m += v;
    m /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size()));
}

double apply_measure(Measure m, std::span<const double> values) {
    return m == Measure::Range ? measure_range(values) : measure_std(values);
}

size_t ProjectionTensor::total() const {
    size_t n = 1;
    for (const auto& l : labels) n *= l.size();
    return n;
}

void ProjectionTensor::validate() const {
    if (labels.empty()) throw std::invalid_argument("tensor: no stages");
    if (stage_names.size() != labels.size())
        throw std::invalid_argument("tensor: stage name count mismatch");
    for (const auto& l : labels)
        if (l.empty()) throw std::invalid_argument("tensor: stage with no scenarios");
    if (values.size() != total())
        throw std::invalid_argument("tensor: incomplete factorial (missing combinations)");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("tensor: non-finite value");
}

size_t ProjectionTensor::flat_index(std::span<const size_t> idx) const {
    size_t flat = 0;
    for (size_t k = 0; k < labels.size(); ++k) flat = flat * labels[k].size() + idx[k];
    return flat;
}

namespace {

size_t label_index(const std::vector<std::string>& labels, const std::string& l) {
    auto it = std::find(labels.begin(), labels.end(), l);
    if (it == labels.end())
        throw std::invalid_argument("unknown scenario label: " + l);
    return static_cast<size_t>(it - labels.begin());
}

// Gather values over stages 1..k with a fixed numeric suffix.
std::vector<double> gather(const ProjectionTensor& t, int k,
                           std::span<const size_t> suffix_idx) {
    const int K = t.num_stages();
    size_t n_lead = 1;
    for (int j = 0; j < k; ++j) n_lead *= t.stage_size(j);

    std::vector<size_t> idx(K, 0);
    for (int j = k; j < K; ++j) idx[j] = suffix_idx[j - k];

    std::vector<double> out;
    out.reserve(n_lead);
    for (size_t lead = 0; lead < n_lead; ++lead) {
        size_t rem = lead;
        for (int j = k - 1; j >= 0; --j) {
            idx[j] = rem % t.stage_size(j);
            rem /= t.stage_size(j);
        }
        out.push_back(t.at(idx));
    }
    return out;
}

}  // namespace

double conditional_cumulative(const ProjectionTensor& tensor, int k,
                              std::span<const std::string> suffix_labels, Measure m) {
    tensor.validate();
    const int K = tensor.num_stages();
    if (k < 1 || k > K) throw std::invalid_argument("conditional_cumulative: bad stage");
    if (static_cast<int>(suffix_labels.size()) != K - k)
        throw std::invalid_argument("conditional_cumulative: suffix size mismatch");
    std::vector<size_t> suffix(K - k);
    for (int j = 0; j < K - k; ++j)
        suffix[j] = label_index(tensor.labels[k + j], suffix_labels[j]);
    return apply_measure(m, gather(tensor, k, suffix));
}

double marginal_cumulative(const ProjectionTensor& tensor, int k, Measure m) {
    tensor.validate();
    const int K = tensor.num_stages();
    if (k < 1 || k > K) throw std::invalid_argument("marginal_cumulative: bad stage");

    size_t n_suffix = 1;
    for (int j = k; j < K; ++j) n_suffix *= tensor.stage_size(j);

    double sum = 0.0;
    std::vector<size_t> suffix(K - k, 0);
    for (size_t s = 0; s < n_suffix; ++s) {
        size_t rem = s;
        for (int j = K - k - 1; j >= 0; --j) {
            suffix[j] = rem % tensor.stage_size(k + j);
            rem /= tensor.stage_size(k + j);
        }
        sum += apply_measure(m, gather(tensor, k, suffix));
    }
    return sum / static_cast<double>(n_suffix);
}

double stage_uncertainty(const ProjectionTensor& tensor, int k, Measure m) {
    double up = marginal_cumulative(tensor, k, m);
    double lo = k > 1 ? marginal_cumulative(tensor, k - 1, m) : 0.0;
    return up - lo;
}

DecompositionReport decompose(const ProjectionTensor& tensor, Measure m) {
    tensor.validate();
    const int K = tensor.num_stages();
    DecompositionReport rep;
    rep.measure = m;
    rep.stage_names = tensor.stage_names;
    rep.cumulative.resize(K);
    rep.stage.resize(K);
    for (int k = 1; k <= K; ++k) rep.cumulative[k - 1] = marginal_cumulative(tensor, k, m);
    double prev = 0.0;
    for (int k = 0; k < K; ++k) {
        rep.stage[k] = rep.cumulative[k] - prev;  // telescoping by construction
        prev = rep.cumulative[k];
    }
    rep.total = rep.cumulative[K - 1];
    rep.stage_fraction.resize(K);
    for (int k = 0; k < K; ++k)
        rep.stage_fraction[k] = rep.total != 0.0 ? rep.stage[k] / rep.total : 0.0;
    return rep;
}

ProjectionTensor read_tensor_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open tensor: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty tensor file: " + path);

    auto header = split_csv_line(line);
    if (header.size() < 2) throw std::runtime_error("tensor header needs >= 1 stage + value");
    const int K = static_cast<int>(header.size()) - 1;

    ProjectionTensor t;
    t.stage_names.assign(header.begin(), header.end() - 1);
    t.labels.resize(K);

    std::vector<std::vector<std::string>> rows;
    std::vector<double> vals;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        auto f = split_csv_line(line);
        if (static_cast<int>(f.size()) != K + 1)
            throw std::runtime_error("bad tensor row: " + line);
        for (int k = 0; k < K; ++k) {
            if (std::find(t.labels[k].begin(), t.labels[k].end(), f[k]) == t.labels[k].end())
                t.labels[k].push_back(f[k]);  // first-appearance order
        }
        rows.push_back({f.begin(), f.end() - 1});
        vals.push_back(std::stod(f[K]));
    }

    t.values.assign(t.total(), std::numeric_limits<double>::quiet_NaN());
    std::vector<char> seen(t.total(), 0);
    std::vector<size_t> idx(K);
    for (size_t r = 0; r < rows.size(); ++r) {
        for (int k = 0; k < K; ++k) idx[k] = label_index(t.labels[k], rows[r][k]);
        size_t flat = t.flat_index(idx);
        if (seen[flat]) throw std::runtime_error("duplicate tensor combination in " + path);
        seen[flat] = 1;
        t.values[flat] = vals[r];
    }
    t.validate();  // rejects missing combinations (NaN values remain)
    return t;
}

void write_tensor_csv(const ProjectionTensor& tensor, const std::string& path) {
    tensor.validate();
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write tensor: " + path);
    for (const auto& s : tensor.stage_names) std::fprintf(f, "%s,", s.c_str());
    std::fprintf(f, "value_km2\n");
    const int K = tensor.num_stages();
    std::vector<size_t> idx(K, 0);
    for (size_t flat = 0; flat < tensor.values.size(); ++flat) {
        size_t rem = flat;
        for (int k = K - 1; k >= 0; --k) {
            idx[k] = rem % tensor.stage_size(k);
            rem /= tensor.stage_size(k);
        }
        for (int k = 0; k < K; ++k)
            std::fprintf(f, "%s,", tensor.labels[k][idx[k]].c_str());
        std::fprintf(f, "%.10g\n", tensor.values[flat]);
    }
    std::fclose(f);
}

void write_decomposition_csv(const DecompositionReport& rep, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write decomposition: " + path);
    std::fprintf(f, "measure,stage,stage_uncertainty_km2,stage_share_pct,"
                    "cumulative_uncertainty_km2,cumulative_share_pct\n");
    for (size_t k = 0; k < rep.stage.size(); ++k) {
        double cum_share = rep.total != 0.0 ? 100.0 * rep.cumulative[k] / rep.total : 0.0;
        std::fprintf(f, "%s,%s,%.10g,%.6g,%.10g,%.6g\n", measure_name(rep.measure).c_str(),
                     rep.stage_names[k].c_str(), rep.stage[k],
                     100.0 * rep.stage_fraction[k], rep.cumulative[k], cum_share);
    }
    std::fclose(f);
}

std::string format_decomposition_table(const DecompositionReport& rep) {
    std::ostringstream os;
    char buf[160];
    os << "Uncertainty decomposition (" << measure_name(rep.measure) << ", km2)\n";
    std::snprintf(buf, sizeof(buf), "%-12s %22s %26s\n", "stage", "stage uncertainty",
                  "cumulative uncertainty");
    os << buf;
    for (size_t k = 0; k < rep.stage.size(); ++k) {
        double stage_pct = 100.0 * rep.stage_fraction[k];
        double cum_pct = rep.total != 0.0 ? 100.0 * rep.cumulative[k] / rep.total : 0.0;
        std::snprintf(buf, sizeof(buf), "%-12s %12.4f [%5.1f%%] %16.4f [%5.1f%%]\n",
                      rep.stage_names[k].c_str(), rep.stage[k], stage_pct,
                      rep.cumulative[k], cum_pct);
        os << buf;
    }
    std::snprintf(buf, sizeof(buf), "%-12s %12.4f\n", "total", rep.total);
    os << buf;
    return os.str();
}

}  // namespace floodcast
