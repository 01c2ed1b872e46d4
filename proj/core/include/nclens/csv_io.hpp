#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "nclens/dataset.hpp"
#include "nclens/ensemble.hpp"

namespace nclens::io {

/// Format a double so that parsing it back yields the same bits.
std::string format_double(double v);

/// Prediction-matrix CSV: header `y_true,<model_1>,...,<model_m>`, one row per sample.
PredictionMatrix read_prediction_csv(std::istream& in);
PredictionMatrix read_prediction_csv(const std::filesystem::path& path);
void write_prediction_csv(std::ostream& out, const PredictionMatrix& preds);
void write_prediction_csv(const std::filesystem::path& path, const PredictionMatrix& preds);

/// Dataset CSV: feature columns plus a `target` column.
///
/// Rows with an empty or `NA`/`NaN` cell are dropped. Columns holding any
/// non-numeric value are treated as nominal and one-hot encoded as
/// `<column>=<level>` indicator columns, levels in sorted order.
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);

}  // namespace nclens::io
