/*
 * Copyright 2026 The surveyshap Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Standalone SVG charts. Output is a pure function of the inputs.

#ifndef SURVEYSHAP_SVG_H_
#define SURVEYSHAP_SVG_H_

#include <cstddef>
#include <string>
#include <vector>

#include "surveyshap/analysis.h"

namespace surveyshap {

// Scatter of attribution against feature value, colored by the color column.
// Larger extracts are thinned to every k-th row so at most `max_points`
// markers are drawn.
std::string svg_scatter(const DependenceExtract& d, const std::string& title,
                        std::size_t max_points = 5000);

// Mean line with a shaded confidence band.
std::string svg_cohort(const CohortCurve& c, const std::string& title);

// Horizontal bars, drawn in the given order.
std::string svg_bar(const std::vector<std::string>& labels,
                    const std::vector<double>& values, const std::string& title);

// Grid with cool-to-warm shading.
std::string svg_heatmap(const HeatmapMatrix& h, const std::string& title);

}  // namespace surveyshap

#endif  // SURVEYSHAP_SVG_H_
