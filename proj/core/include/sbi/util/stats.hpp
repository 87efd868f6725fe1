// Copyright 2026 The sbi-engine Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <span>
#include <vector>

namespace sbi::stats {

double mean(std::span<const double> v);
// Unbiased sample variance; 0 for fewer than two values.
double variance(std::span<const double> v);
double stddev(std::span<const double> v);

double normal_cdf(double z);
double normal_log_pdf(double x, double mean, double sd);

// Monte-Carlo standard error of the mean by batch means with floor(sqrt(n))
// batches.
double batch_means_mcse(std::span<const double> v);

// Linear-interpolated quantile of already sorted values, q in [0, 1].
double sorted_quantile(std::span<const double> sorted, double q);

// Survival function of the Kolmogorov distribution,
// Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_survival(double lambda);
// Asymptotic KS p-value for statistic d with effective sample size n, using
// Stephens' finite-sample correction.
double ks_pvalue(double d, double n);

// sup |F_n - F| against an analytic CDF.
double ks_distance(std::span<const double> samples,
                   const std::function<double(double)>& cdf);
// Two-sample KS statistic and its asymptotic p-value.
double ks_two_sample(std::span<const double> a, std::span<const double> b);
double ks_two_sample_pvalue(double d, std::size_t n1, std::size_t n2);

}  // namespace sbi::stats
