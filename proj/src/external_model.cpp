#include "shiftlens/external_model.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <thread>

namespace shiftlens {

namespace {

std::string serialize_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  char buf[64];
  std::string out;
  for (Index j = 0; j < row.size(); ++j) {
    if (j) out.push_back(',');
    std::snprintf(buf, sizeof(buf), "%.17g", row(j));
    out += buf;
  }
  return out;
}

// Runs `command` through /bin/sh, feeding `input` on stdin; returns stdout.
std::string run_command(const std::string& command, const std::string& input) {
  int to_child[2];
  int from_child[2];
  if (pipe(to_child) != 0 || pipe(from_child) != 0)
    throw ProtocolError("model bridge: cannot create pipes");

  pid_t pid = fork();
  if (pid < 0) throw ProtocolError("model bridge: fork failed");
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);

  // Feed stdin from a helper thread so large batches cannot deadlock on a
  // child that interleaves reading and writing.
  std::thread writer([fd = to_child[1], &input] {
    std::size_t written = 0;
    while (written < input.size()) {
      ssize_t k = write(fd, input.data() + written, input.size() - written);
      if (k <= 0) break;
      written += static_cast<std::size_t>(k);
    }
    close(fd);
  });

  std::string output;
  char buf[4096];
  ssize_t k = 0;
  while ((k = read(from_child[0], buf, sizeof(buf))) > 0) output.append(buf, static_cast<std::size_t>(k));
  close(from_child[0]);
  writer.join();

  int status = 0;
  waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw ProtocolError("model bridge: command failed: " + command);
  return output;
}

std::vector<double> parse_probability_row(const std::string& line, std::size_t row_number) {
  std::vector<double> values;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      values.push_back(std::stod(cell));
    } catch (...) {
      throw ProtocolError("model bridge: row " + std::to_string(row_number) +
                          " has a non-numeric cell \"" + cell + "\"");
    }
  }
  double total = 0;
  for (double v : values) {
    if (!(v >= 0))
      throw ProtocolError("model bridge: row " + std::to_string(row_number) +
                          " has a negative probability");
    total += v;
  }
  if (values.empty() || std::abs(total - 1.0) > 1e-6)
    throw ProtocolError("model bridge: row " + std::to_string(row_number) +
                        " is not a probability simplex (sum " + std::to_string(total) + ")");
  return values;
}

}  // namespace

ExternalModel::ExternalModel(std::string command, Index input_dim)
    : command_(std::move(command)), input_dim_(input_dim) {
  if (command_.empty()) throw DomainError("model bridge: empty command");
  if (input_dim_ < 1) throw DomainError("model bridge: input dimension must be positive");
}

Index ExternalModel::class_count() const {
  std::lock_guard lock(mutex_);
  if (classes_ < 0)
    throw DomainError("model bridge: class count unknown before the first prediction");
  return classes_;
}

Matrix ExternalModel::predict_batch(const Matrix& rows) const {
  if (rows.cols() != input_dim_)
    throw ShapeError("model bridge expects " + std::to_string(input_dim_) + " features, got " +
                     std::to_string(rows.cols()));
  std::lock_guard lock(mutex_);

  std::vector<std::string> keys(static_cast<std::size_t>(rows.rows()));
  std::vector<Index> misses;
  std::string batch;
  for (Index i = 0; i < rows.rows(); ++i) {
    keys[static_cast<std::size_t>(i)] = serialize_row(rows.row(i));
    if (!cache_.contains(keys[static_cast<std::size_t>(i)])) {
      cache_.emplace(keys[static_cast<std::size_t>(i)], std::vector<double>{});
      misses.push_back(i);
      batch += keys[static_cast<std::size_t>(i)];
      batch.push_back('\n');
    }
  }

  if (!misses.empty()) {
    std::string output = run_command(command_, batch);
    std::stringstream ss(output);
    std::string line;
    std::size_t row_number = 0;
    for (Index i : misses) {
      if (!std::getline(ss, line) || line.empty())
        throw ProtocolError("model bridge: produced " + std::to_string(row_number) +
                            " rows for " + std::to_string(misses.size()) + " inputs");
      ++row_number;
      std::vector<double> probs = parse_probability_row(line, row_number);
      if (classes_ < 0) classes_ = static_cast<Index>(probs.size());
      if (static_cast<Index>(probs.size()) != classes_)
        throw ProtocolError("model bridge: row " + std::to_string(row_number) +
                            " changed the class count");
      cache_[keys[static_cast<std::size_t>(i)]] = std::move(probs);
    }
  }

  Matrix out(rows.rows(), classes_);
  for (Index i = 0; i < rows.rows(); ++i) {
    const std::vector<double>& probs = cache_.at(keys[static_cast<std::size_t>(i)]);
    for (Index c = 0; c < classes_; ++c) out(i, c) = probs[static_cast<std::size_t>(c)];
  }
  return out;
}

}  // namespace shiftlens
