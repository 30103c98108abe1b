#include "klap/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace klap {

namespace {

struct MatrixText {
  int rows = 0;
  int cols = 0;
  std::vector<double> entries;
};

std::string matrix_to_text(const char* tag, int rows, int cols,
                           const std::vector<double>& entries) {
  std::string out;
  out += tag;
  out += " v1 ";
  out += std::to_string(rows);
  out += ' ';
  out += std::to_string(cols);
  out += '\n';
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c > 0) out += ' ';
      out += format_g17(entries[static_cast<std::size_t>(r) * cols + c]);
    }
    out += '\n';
  }
  return out;
}

MatrixText matrix_from_text(const char* tag, const std::string& text) {
  std::istringstream in(text);
  std::string got_tag, version;
  MatrixText m;
  if (!(in >> got_tag >> version >> m.rows >> m.cols)) {
    throw DomainError("malformed matrix header");
  }
  if (got_tag != tag || version != "v1") {
    throw DomainError("expected header '" + std::string(tag) +
                      " v1 <rows> <cols>', got '" + got_tag + " " + version +
                      "'");
  }
  if (m.rows < 1 || m.cols < 1) throw DomainError("bad matrix dimensions");
  m.entries.resize(static_cast<std::size_t>(m.rows) * m.cols);
  for (double& v : m.entries) {
    if (!(in >> v)) throw DomainError("matrix body truncated");
  }
  return m;
}

// CSV field for an optional diagnostic: NaN renders as an empty field.
void append_field(std::string& out, double v) {
  if (!std::isnan(v)) out += format_g17(v);
}

}  // namespace

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string kernel_to_text(const CorruptionKernel& kernel) {
  return matrix_to_text("klap-kernel", kernel.output_size(),
                        kernel.input_size(), kernel.entries());
}

CorruptionKernel kernel_from_text(const std::string& text,
                                  const std::string& label) {
  MatrixText m = matrix_from_text("klap-kernel", text);
  return CorruptionKernel(m.rows, m.cols, std::move(m.entries), label);
}

std::string coupling_to_text(const Coupling& pi) {
  return matrix_to_text("klap-coupling", pi.input_size, pi.output_size,
                        pi.joint);
}

Coupling coupling_from_text(const std::string& text) {
  MatrixText m = matrix_from_text("klap-coupling", text);
  Coupling pi;
  pi.input_size = m.rows;
  pi.output_size = m.cols;
  pi.joint = std::move(m.entries);
  return pi;
}

std::string trajectory_to_csv(const Trajectory& trajectory) {
  std::string out = "k,J_lambda,kl_q_Trp,kl_hdagger_p,residual,tv_to_reference\n";
  for (const TrajectoryRecord& rec : trajectory.records) {
    out += std::to_string(rec.k);
    out += ',';
    append_field(out, rec.objective);
    out += ',';
    append_field(out, rec.kl_q_corrupted);
    out += ',';
    append_field(out, rec.kl_hdagger_p);
    out += ',';
    append_field(out, rec.residual);
    out += ',';
    append_field(out, rec.tv_to_reference);
    out += '\n';
  }
  return out;
}

std::string recovery_report_to_csv(const RecoveryReport& report) {
  std::string out =
      "clean_count,noisy_count,lambda_weight,gamma,kl_to_pdata,tv_to_pdata,"
      "iterations,converged\n";
  for (const RecoveryRow& row : report.rows) {
    out += std::to_string(row.clean_count);
    out += ',';
    out += std::to_string(row.noisy_count);
    out += ',';
    out += format_g17(row.lambda_weight);
    out += ',';
    out += format_g17(row.gamma);
    out += ',';
    out += format_g17(row.kl_to_pdata);
    out += ',';
    out += format_g17(row.tv_to_pdata);
    out += ',';
    out += std::to_string(row.iterations);
    out += ',';
    out += row.converged ? "true" : "false";
    out += '\n';
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file_atomic(const std::string& path,
                            const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path());
  }
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, target);
}

}  // namespace klap
