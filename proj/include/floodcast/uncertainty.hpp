#pragma once

#include <span>
#include <string>
#include <vector>

namespace floodcast {

/// Spread measure applied to sets of projected values.
enum class Measure { Range, StdDev };
std::string measure_name(Measure m);

double measure_range(std::span<const double> values);
/// Population standard deviation (1/n).
double measure_std(std::span<const double> values);
double apply_measure(Measure m, std::span<const double> values);

/**
 * Dense full-factorial tensor of projected values (inundation extents, km2)
 * over K modeling stages; stage k has scenario labels labels[k]. Storage is
 * C order with the last stage varying fastest.
 */
struct ProjectionTensor {
    std::vector<std::string> stage_names;              // K entries
    std::vector<std::vector<std::string>> labels;      // per-stage scenario labels
    std::vector<double> values;

    int num_stages() const { return static_cast<int>(labels.size()); }
    size_t stage_size(int k) const { return labels[k].size(); }
    size_t total() const;
    void validate() const;  // complete factorial, finite values

    size_t flat_index(std::span<const size_t> idx) const;
    double at(std::span<const size_t> idx) const { return values[flat_index(idx)]; }
};

/**
 * Conditional cumulative uncertainty up to stage k (1-based): the measure over
 * all values varying stages 1..k while stages k+1..K are fixed at the given
 * suffix labels.
 */
double conditional_cumulative(const ProjectionTensor& tensor, int k,
                              std::span<const std::string> suffix_labels, Measure m);

/// Marginal cumulative uncertainty up to stage k: mean of the conditional
/// values over all suffix combinations.
double marginal_cumulative(const ProjectionTensor& tensor, int k, Measure m);

/// Stage contribution: difference of successive marginal cumulative values
/// (cumulative up to stage 0 defined as 0).
double stage_uncertainty(const ProjectionTensor& tensor, int k, Measure m);

struct DecompositionReport {
    Measure measure = Measure::Range;
    std::vector<std::string> stage_names;
    std::vector<double> cumulative;      // per stage
    std::vector<double> stage;           // per stage, telescoping differences
    double total = 0.0;                  // cumulative at K
    std::vector<double> stage_fraction;  // stage / total (0 when total == 0)
};

DecompositionReport decompose(const ProjectionTensor& tensor, Measure m);

/// Tensor CSV: header `stage1,...,stageK,value_km2`, one row per combination.
ProjectionTensor read_tensor_csv(const std::string& path);
void write_tensor_csv(const ProjectionTensor& tensor, const std::string& path);

void write_decomposition_csv(const DecompositionReport& rep, const std::string& path);
/// Human-readable table: stage and cumulative uncertainty with bracketed
/// percentage shares.
std::string format_decomposition_table(const DecompositionReport& rep);

}  // namespace floodcast
