#pragma once

// Reference test-set MAPE grids for four countries x three sexes.

#include <string>
#include <vector>

namespace fixtures {

inline const std::vector<std::string> kDatasets{
    "australia-female", "australia-male", "australia-total", "france-female", "france-male", "france-total",
    "japan-female",     "japan-male",     "japan-total",     "portugal-female", "portugal-male", "portugal-total"};

// Hybrid strategies; columns Direct, MIMO, Recursive for each family.
inline const std::vector<std::string> kStrategyModels{
    "arima-lstm-direct",   "arima-lstm-mimo",   "arima-lstm-recursive",
    "arima-mlp-direct",    "arima-mlp-mimo",    "arima-mlp-recursive",
    "arima-nbeats-direct", "arima-nbeats-mimo", "arima-nbeats-recursive"};

inline const std::vector<std::vector<double>> kStrategyGrid{
    {2.154, 2.101, 2.072, 2.141, 2.033, 2.185, 2.420, 2.185, 2.042},
    {2.029, 1.970, 1.988, 1.974, 1.923, 1.982, 2.428, 2.391, 2.197},
    {1.495, 1.469, 1.483, 1.623, 1.497, 1.470, 1.519, 1.521, 1.607},
    {1.574, 1.506, 1.607, 1.628, 1.552, 1.525, 1.565, 1.497, 1.502},
    {2.251, 2.283, 2.220, 2.277, 2.172, 2.418, 2.115, 2.170, 2.222},
    {1.322, 1.680, 1.346, 1.360, 1.679, 1.398, 1.368, 1.516, 1.508},
    {2.103, 2.006, 1.920, 2.104, 2.033, 1.949, 2.116, 2.594, 1.998},
    {2.095, 2.039, 2.026, 2.175, 2.042, 2.034, 1.686, 1.786, 2.236},
    {1.772, 1.700, 1.575, 1.720, 1.703, 1.474, 2.122, 2.113, 1.629},
    {3.025, 3.018, 3.125, 3.061, 3.140, 2.850, 3.003, 3.005, 2.851},
    {3.144, 3.328, 3.038, 3.339, 3.294, 3.149, 3.212, 3.269, 2.997},
    {2.292, 2.221, 2.134, 2.344, 2.319, 2.299, 2.447, 2.317, 2.597}};

// Best hybrid against multivariate, statistical and single network models.
inline const std::vector<std::string> kComparisonModels{
    "lc",       "plat",        "arima",          "lstm-direct",      "lstm-mimo",   "lstm-recursive", "mlp-direct",
    "mlp-mimo", "mlp-recursive", "nbeats-direct", "nbeats-mimo", "nbeats-recursive", "arima-lstm-recursive"};

inline const std::vector<std::vector<double>> kComparisonGrid{
    {3.823, 3.676, 2.166, 4.614, 4.870, 4.647, 3.506, 3.193, 6.417, 3.431, 5.495, 31.597, 2.072},
    {4.640, 5.385, 2.376, 6.170, 6.145, 6.323, 4.602, 3.493, 5.595, 5.345, 7.434, 5.988, 1.988},
    {3.594, 4.286, 1.523, 5.316, 5.142, 5.496, 3.648, 2.693, 5.725, 3.986, 5.972, 3.918, 1.483},
    {2.247, 4.144, 1.563, 4.545, 4.720, 3.832, 3.384, 3.459, 3.635, 3.110, 5.006, 3.409, 1.607},
    {2.868, 5.276, 2.275, 5.735, 5.574, 6.114, 4.378, 4.267, 4.038, 5.011, 6.419, 5.284, 2.220},
    {2.258, 4.364, 1.575, 4.962, 5.048, 4.628, 3.782, 3.666, 2.842, 3.657, 4.749, 3.723, 1.346},
    {6.870, 5.256, 2.418, 3.087, 3.421, 2.139, 2.679, 3.451, 4.666, 2.740, 4.800, 2.281, 1.920},
    {3.419, 4.732, 1.587, 4.344, 4.552, 3.863, 3.436, 3.225, 4.696, 3.385, 4.555, 3.960, 2.026},
    {4.367, 4.435, 1.964, 3.831, 3.755, 2.541, 2.887, 3.624, 3.308, 3.285, 4.479, 3.873, 1.575},
    {3.554, 5.391, 2.957, 7.348, 7.395, 7.532, 5.799, 4.914, 5.263, 6.132, 8.490, 5.131, 3.125},
    {5.575, 5.704, 3.161, 7.458, 7.627, 7.776, 6.238, 5.472, 9.321, 7.414, 9.147, 6.517, 3.038},
    {4.134, 5.173, 2.598, 7.459, 7.480, 7.202, 5.939, 6.035, 5.879, 6.381, 9.143, 6.234, 2.134}};

// Summary rows reported with the comparison grid.
inline const std::vector<double> kComparisonMean{3.566, 4.589, 1.994, 4.990, 4.991, 4.653, 3.833,
                                                 3.677, 4.615, 4.157, 5.823, 6.676, 1.905};
inline const std::vector<int> kComparisonPosition{3, 7, 2, 10, 11, 9, 5, 4, 8, 6, 12, 13, 1};
inline const std::vector<double> kComparisonStd{1.327, 0.630, 0.558, 1.460, 1.416, 1.883, 1.213,
                                                1.012, 1.726, 1.524, 1.802, 7.905, 0.558};

}  // namespace fixtures
