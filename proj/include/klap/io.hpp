#pragma once

#include <string>
#include <vector>

#include "klap/eot.hpp"
#include "klap/empirical.hpp"
#include "klap/kernels.hpp"
#include "klap/solver.hpp"

namespace klap {

// 17 significant digits, enough to round-trip an IEEE double exactly.
std::string format_g17(double v);

// Plain-text matrix format, first line "<tag> v1 <rows> <cols>" followed
// by one space-separated row per line.
std::string kernel_to_text(const CorruptionKernel& kernel);
CorruptionKernel kernel_from_text(const std::string& text,
                                  const std::string& label);
std::string coupling_to_text(const Coupling& pi);
Coupling coupling_from_text(const std::string& text);

// Trajectory CSV, header "k,J_lambda,kl_q_Trp,kl_hdagger_p,residual,
// tv_to_reference"; NaN diagnostics become empty fields.
std::string trajectory_to_csv(const Trajectory& trajectory);

// Recovery report CSV, header "clean_count,noisy_count,lambda_weight,
// gamma,kl_to_pdata,tv_to_pdata,iterations,converged".
std::string recovery_report_to_csv(const RecoveryReport& report);

std::string read_text_file(const std::string& path);

// Writes via a temporary file in the same directory plus an atomic
// rename, so concurrent sweep workers never expose partial files.
void write_text_file_atomic(const std::string& path,
                            const std::string& content);

}  // namespace klap
