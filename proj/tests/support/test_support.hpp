#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "tablehop/corpus.hpp"
#include "tablehop/embedding.hpp"
#include "tablehop/http.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path fixture_dir() { return fs::path(TABLEHOP_FIXTURE_DIR); }
inline fs::path golden_dir() { return fs::path(TABLEHOP_GOLDEN_DIR); }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("tablehop-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

/// In-process HttpTransport: records every request and answers through a handler.
class FakeTransport : public tablehop::HttpTransport {
 public:
  using Handler = std::function<tablehop::HttpResponse(const tablehop::HttpRequest&)>;

  explicit FakeTransport(Handler handler) : handler_(std::move(handler)) {}

  tablehop::HttpResponse post(const tablehop::HttpRequest& request) override {
    {
      std::lock_guard lock(mutex_);
      requests_.push_back(request);
    }
    return handler_(request);
  }

  std::vector<tablehop::HttpRequest> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

 private:
  Handler handler_;
  mutable std::mutex mutex_;
  std::vector<tablehop::HttpRequest> requests_;
};

inline tablehop::Cell cell(std::string text, std::vector<std::string> links = {}) {
  return tablehop::Cell{std::move(text), std::move(links)};
}

inline tablehop::Table make_table(std::string id, std::string page, std::string section,
                                  std::vector<std::string> header,
                                  std::vector<std::vector<std::string>> rows) {
  tablehop::Table t;
  t.id = std::move(id);
  t.page_title = std::move(page);
  t.section_title = std::move(section);
  t.header = std::move(header);
  for (auto& r : rows) {
    std::vector<tablehop::Cell> cells;
    for (auto& c : r) cells.push_back(cell(std::move(c)));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

inline tablehop::Corpus robert_corpus() {
  auto dir = fixture_dir() / "robert";
  return tablehop::load_corpus(dir / "tables.jsonl", dir / "passages.jsonl");
}

/// Random unit vector with coordinates drawn from a small integer grid, so
/// exact score ties happen often enough to exercise the tie rule.
inline tablehop::Embedding random_grid_vector(std::mt19937_64& rng, std::size_t dim, int spread = 2) {
  std::uniform_int_distribution<int> coord(-spread, spread);
  tablehop::Embedding e;
  e.values.resize(dim);
  do {
    for (auto& v : e.values) v = coord(rng);
  } while (std::all_of(e.values.begin(), e.values.end(), [](double v) { return v == 0.0; }));
  tablehop::l2_normalize(e.values);
  return e;
}

/// Unit vector whose coordinates are 0 or +-2^-j with 4^j non-zeros, so every
/// dot product between two of them is exact in binary floating point. Any
/// summation order gives the same score, and exact ties are common.
inline tablehop::Embedding random_dyadic_unit(std::mt19937_64& rng, std::size_t dim) {
  std::size_t max_level = 0;
  while (std::size_t(1) << (2 * (max_level + 1)) <= dim) ++max_level;
  std::size_t level = rng() % (max_level + 1);
  std::size_t nonzero = std::size_t(1) << (2 * level);
  double magnitude = 1.0 / static_cast<double>(std::size_t(1) << level);
  std::vector<std::size_t> slots(dim);
  for (std::size_t i = 0; i < dim; ++i) slots[i] = i;
  std::shuffle(slots.begin(), slots.end(), rng);
  tablehop::Embedding e;
  e.values.assign(dim, 0.0);
  for (std::size_t i = 0; i < nonzero; ++i) e.values[slots[i]] = (rng() & 1) ? -magnitude : magnitude;
  return e;
}

}  // namespace testsupport
