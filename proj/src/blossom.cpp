// Weighted general matching via Edmonds' blossom algorithm with the
// primal-dual bookkeeping of Galil ("Efficient algorithms for finding maximum
// matching in graphs", 1986). Vertex and blossom labels: 0 free, 1 S (outer),
// 2 T (inner); bit 4 marks blossoms during a path scan. Endpoints are encoded
// as p = 2k (first vertex of edge k) or 2k+1 (second); p ^ 1 is the other end.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "dosematch/errors.hpp"
#include "dosematch/matching.hpp"

namespace dosematch {

namespace {

class BlossomSolver {
 public:
  BlossomSolver(int n, const std::vector<std::pair<int, int>>& ends, const std::vector<std::int64_t>& w)
      : n_(n), edges_(ends), weight_(w) {
    const int m = static_cast<int>(edges_.size());
    std::int64_t maxw = 0;
    for (auto x : weight_) maxw = std::max(maxw, x);
    endpoint_.resize(2 * static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
      endpoint_[2 * k] = edges_[k].first;
      endpoint_[2 * k + 1] = edges_[k].second;
    }
    neighbend_.assign(n_, {});
    for (int k = 0; k < m; ++k) {
      neighbend_[edges_[k].first].push_back(2 * k + 1);
      neighbend_[edges_[k].second].push_back(2 * k);
    }
    mate_.assign(n_, -1);
    label_.assign(2 * n_, 0);
    labelend_.assign(2 * n_, -1);
    inblossom_.resize(n_);
    for (int v = 0; v < n_; ++v) inblossom_[v] = v;
    blossomparent_.assign(2 * n_, -1);
    blossomchilds_.assign(2 * n_, {});
    blossombase_.assign(2 * n_, -1);
    for (int v = 0; v < n_; ++v) blossombase_[v] = v;
    blossomendps_.assign(2 * n_, {});
    bestedge_.assign(2 * n_, -1);
    blossombestedges_.assign(2 * n_, {});
    has_bestedges_.assign(2 * n_, false);
    for (int b = 2 * n_ - 1; b >= n_; --b) unused_.push_back(b);
    // unused_ pops from the back; keep the Python reference's order (lowest index last).
    std::reverse(unused_.begin(), unused_.end());
    dualvar_.assign(2 * n_, 0);
    for (int v = 0; v < n_; ++v) dualvar_[v] = maxw;
    allowedge_.assign(m, false);
  }

  std::vector<int> solve() {
    if (edges_.empty()) return std::vector<int>(n_, -1);
    for (int stage = 0; stage < n_; ++stage) {
      std::fill(label_.begin(), label_.end(), 0);
      std::fill(bestedge_.begin(), bestedge_.end(), -1);
      for (int b = n_; b < 2 * n_; ++b) {
        blossombestedges_[b].clear();
        has_bestedges_[b] = false;
      }
      std::fill(allowedge_.begin(), allowedge_.end(), false);
      queue_.clear();

      for (int v = 0; v < n_; ++v) {
        if (mate_[v] == -1 && label_[inblossom_[v]] == 0) assign_label(v, 1, -1);
      }

      bool augmented = false;
      for (;;) {
        while (!queue_.empty() && !augmented) {
          const int v = queue_.back();
          queue_.pop_back();
          for (int p : neighbend_[v]) {
            const int k = p / 2;
            const int w = endpoint_[p];
            if (inblossom_[v] == inblossom_[w]) continue;
            std::int64_t kslack = 0;
            if (!allowedge_[k]) {
              kslack = slack(k);
              if (kslack <= 0) allowedge_[k] = true;
            }
            if (allowedge_[k]) {
              if (label_[inblossom_[w]] == 0) {
                assign_label(w, 2, p ^ 1);
              } else if (label_[inblossom_[w]] == 1) {
                const int base = scan_blossom(v, w);
                if (base >= 0) {
                  add_blossom(base, k);
                } else {
                  augment_matching(k);
                  augmented = true;
                  break;
                }
              } else if (label_[w] == 0) {
                label_[w] = 2;
                labelend_[w] = p ^ 1;
              }
            } else if (label_[inblossom_[w]] == 1) {
              const int b = inblossom_[v];
              if (bestedge_[b] == -1 || kslack < slack(bestedge_[b])) bestedge_[b] = k;
            } else if (label_[w] == 0) {
              if (bestedge_[w] == -1 || kslack < slack(bestedge_[w])) bestedge_[w] = k;
            }
          }
        }
        if (augmented) break;

        // Dual adjustment.
        int deltatype = 1;
        std::int64_t delta = *std::min_element(dualvar_.begin(), dualvar_.begin() + n_);
        int deltaedge = -1;
        int deltablossom = -1;
        for (int v = 0; v < n_; ++v) {
          if (label_[inblossom_[v]] == 0 && bestedge_[v] != -1) {
            const std::int64_t d = slack(bestedge_[v]);
            if (d < delta) {
              delta = d;
              deltatype = 2;
              deltaedge = bestedge_[v];
            }
          }
        }
        for (int b = 0; b < 2 * n_; ++b) {
          if (blossomparent_[b] == -1 && label_[b] == 1 && bestedge_[b] != -1) {
            const std::int64_t d = slack(bestedge_[b]) / 2;
            if (d < delta) {
              delta = d;
              deltatype = 3;
              deltaedge = bestedge_[b];
            }
          }
        }
        for (int b = n_; b < 2 * n_; ++b) {
          if (blossombase_[b] >= 0 && blossomparent_[b] == -1 && label_[b] == 2 && dualvar_[b] < delta) {
            delta = dualvar_[b];
            deltatype = 4;
            deltablossom = b;
          }
        }

        for (int v = 0; v < n_; ++v) {
          if (label_[inblossom_[v]] == 1) {
            dualvar_[v] -= delta;
          } else if (label_[inblossom_[v]] == 2) {
            dualvar_[v] += delta;
          }
        }
        for (int b = n_; b < 2 * n_; ++b) {
          if (blossombase_[b] >= 0 && blossomparent_[b] == -1) {
            if (label_[b] == 1) {
              dualvar_[b] += delta;
            } else if (label_[b] == 2) {
              dualvar_[b] -= delta;
            }
          }
        }

        if (deltatype == 1) break;
        if (deltatype == 2) {
          allowedge_[deltaedge] = true;
          int i = edges_[deltaedge].first;
          int j = edges_[deltaedge].second;
          if (label_[inblossom_[i]] == 0) std::swap(i, j);
          queue_.push_back(i);
        } else if (deltatype == 3) {
          allowedge_[deltaedge] = true;
          queue_.push_back(edges_[deltaedge].first);
        } else {
          expand_blossom(deltablossom, false);
        }
      }
      if (!augmented) break;

      for (int b = n_; b < 2 * n_; ++b) {
        if (blossomparent_[b] == -1 && blossombase_[b] >= 0 && label_[b] == 1 && dualvar_[b] == 0) {
          expand_blossom(b, true);
        }
      }
    }

    std::vector<int> mate(n_, -1);
    for (int v = 0; v < n_; ++v) {
      if (mate_[v] >= 0) mate[v] = endpoint_[mate_[v]];
    }
    return mate;
  }

 private:
  std::int64_t slack(int k) const {
    return dualvar_[edges_[k].first] + dualvar_[edges_[k].second] - 2 * weight_[k];
  }

  void leaves(int b, std::vector<int>& out) const {
    if (b < n_) {
      out.push_back(b);
      return;
    }
    for (int t : blossomchilds_[b]) leaves(t, out);
  }

  std::vector<int> leaves(int b) const {
    std::vector<int> out;
    leaves(b, out);
    return out;
  }

  void assign_label(int w, int t, int p) {
    const int b = inblossom_[w];
    label_[w] = label_[b] = t;
    labelend_[w] = labelend_[b] = p;
    bestedge_[w] = bestedge_[b] = -1;
    if (t == 1) {
      leaves(b, queue_);
    } else if (t == 2) {
      const int base = blossombase_[b];
      assign_label(endpoint_[mate_[base]], 1, mate_[base] ^ 1);
    }
  }

  // Trace back from v and w to find a new blossom base, or -1 for an augmenting path.
  int scan_blossom(int v, int w) {
    std::vector<int> path;
    int base = -1;
    while (v != -1 || w != -1) {
      int b = inblossom_[v];
      if (label_[b] & 4) {
        base = blossombase_[b];
        break;
      }
      path.push_back(b);
      label_[b] = 5;
      if (labelend_[b] == -1) {
        v = -1;
      } else {
        v = endpoint_[labelend_[b]];
        b = inblossom_[v];
        v = endpoint_[labelend_[b]];
      }
      if (w != -1) std::swap(v, w);
    }
    for (int b : path) label_[b] = 1;
    return base;
  }

  void add_blossom(int base, int k) {
    int v = edges_[k].first;
    int w = edges_[k].second;
    const int bb = inblossom_[base];
    int bv = inblossom_[v];
    int bw = inblossom_[w];
    const int b = unused_.back();
    unused_.pop_back();
    blossombase_[b] = base;
    blossomparent_[b] = -1;
    blossomparent_[bb] = b;
    auto& path = blossomchilds_[b];
    auto& endps = blossomendps_[b];
    path.clear();
    endps.clear();
    while (bv != bb) {
      blossomparent_[bv] = b;
      path.push_back(bv);
      endps.push_back(labelend_[bv]);
      v = endpoint_[labelend_[bv]];
      bv = inblossom_[v];
    }
    path.push_back(bb);
    std::reverse(path.begin(), path.end());
    std::reverse(endps.begin(), endps.end());
    endps.push_back(2 * k);
    while (bw != bb) {
      blossomparent_[bw] = b;
      path.push_back(bw);
      endps.push_back(labelend_[bw] ^ 1);
      w = endpoint_[labelend_[bw]];
      bw = inblossom_[w];
    }
    label_[b] = 1;
    labelend_[b] = labelend_[bb];
    dualvar_[b] = 0;
    for (int leaf : leaves(b)) {
      if (label_[inblossom_[leaf]] == 2) queue_.push_back(leaf);
      inblossom_[leaf] = b;
    }

    std::vector<int> bestedgeto(2 * n_, -1);
    for (int sub : path) {
      std::vector<std::vector<int>> nblists;
      if (!has_bestedges_[sub]) {
        for (int leaf : leaves(sub)) {
          std::vector<int> lst;
          for (int p : neighbend_[leaf]) lst.push_back(p / 2);
          nblists.push_back(std::move(lst));
        }
      } else {
        nblists.push_back(blossombestedges_[sub]);
      }
      for (const auto& nblist : nblists) {
        for (int e : nblist) {
          int i = edges_[e].first;
          int j = edges_[e].second;
          if (inblossom_[j] == b) std::swap(i, j);
          const int bj = inblossom_[j];
          if (bj != b && label_[bj] == 1 && (bestedgeto[bj] == -1 || slack(e) < slack(bestedgeto[bj]))) {
            bestedgeto[bj] = e;
          }
        }
      }
      blossombestedges_[sub].clear();
      has_bestedges_[sub] = false;
      bestedge_[sub] = -1;
    }
    blossombestedges_[b].clear();
    for (int e : bestedgeto) {
      if (e != -1) blossombestedges_[b].push_back(e);
    }
    has_bestedges_[b] = true;
    bestedge_[b] = -1;
    for (int e : blossombestedges_[b]) {
      if (bestedge_[b] == -1 || slack(e) < slack(bestedge_[b])) bestedge_[b] = e;
    }
  }

  void expand_blossom(int b, bool endstage) {
    const std::vector<int> childs = blossomchilds_[b];
    for (int s : childs) {
      blossomparent_[s] = -1;
      if (s < n_) {
        inblossom_[s] = s;
      } else if (endstage && dualvar_[s] == 0) {
        expand_blossom(s, endstage);
      } else {
        for (int leaf : leaves(s)) inblossom_[leaf] = s;
      }
    }
    if (!endstage && label_[b] == 2) {
      const auto& endps = blossomendps_[b];
      const int len = static_cast<int>(childs.size());
      auto child_at = [&](int j) { return childs[((j % len) + len) % len]; };
      auto endp_at = [&](int j) { return endps[((j % len) + len) % len]; };

      const int entrychild = inblossom_[endpoint_[labelend_[b] ^ 1]];
      int j = static_cast<int>(std::find(childs.begin(), childs.end(), entrychild) - childs.begin());
      int jstep;
      int endptrick;
      if (j & 1) {
        j -= len;
        jstep = 1;
        endptrick = 0;
      } else {
        jstep = -1;
        endptrick = 1;
      }
      int p = labelend_[b];
      while (j != 0) {
        label_[endpoint_[p ^ 1]] = 0;
        label_[endpoint_[endp_at(j - endptrick) ^ endptrick ^ 1]] = 0;
        assign_label(endpoint_[p ^ 1], 2, p);
        allowedge_[endp_at(j - endptrick) / 2] = true;
        j += jstep;
        p = endp_at(j - endptrick) ^ endptrick;
        allowedge_[p / 2] = true;
        j += jstep;
      }
      int bv = child_at(j);
      label_[endpoint_[p ^ 1]] = label_[bv] = 2;
      labelend_[endpoint_[p ^ 1]] = labelend_[bv] = p;
      bestedge_[bv] = -1;
      j += jstep;
      while (child_at(j) != entrychild) {
        bv = child_at(j);
        if (label_[bv] == 1) {
          j += jstep;
          continue;
        }
        int labelled = -1;
        for (int leaf : leaves(bv)) {
          if (label_[leaf] != 0) {
            labelled = leaf;
            break;
          }
        }
        if (labelled != -1) {
          label_[labelled] = 0;
          label_[endpoint_[mate_[blossombase_[bv]]]] = 0;
          assign_label(labelled, 2, labelend_[labelled]);
        }
        j += jstep;
      }
    }
    label_[b] = labelend_[b] = -1;
    blossomchilds_[b].clear();
    blossomendps_[b].clear();
    blossombase_[b] = -1;
    blossombestedges_[b].clear();
    has_bestedges_[b] = false;
    bestedge_[b] = -1;
    unused_.push_back(b);
  }

  // Swap matched/unmatched edges along the even path from vertex v to the base of b.
  void augment_blossom(int b, int v) {
    int t = v;
    while (blossomparent_[t] != b) t = blossomparent_[t];
    if (t >= n_) augment_blossom(t, v);
    auto& childs = blossomchilds_[b];
    auto& endps = blossomendps_[b];
    const int len = static_cast<int>(childs.size());
    auto idx = [&](int j) { return static_cast<std::size_t>(((j % len) + len) % len); };

    const int i = static_cast<int>(std::find(childs.begin(), childs.end(), t) - childs.begin());
    int j = i;
    int jstep;
    int endptrick;
    if (i & 1) {
      j -= len;
      jstep = 1;
      endptrick = 0;
    } else {
      jstep = -1;
      endptrick = 1;
    }
    while (j != 0) {
      j += jstep;
      t = childs[idx(j)];
      const int p = endps[idx(j - endptrick)] ^ endptrick;
      if (t >= n_) augment_blossom(t, endpoint_[p]);
      j += jstep;
      t = childs[idx(j)];
      if (t >= n_) augment_blossom(t, endpoint_[p ^ 1]);
      mate_[endpoint_[p]] = p ^ 1;
      mate_[endpoint_[p ^ 1]] = p;
    }
    std::rotate(childs.begin(), childs.begin() + i, childs.end());
    std::rotate(endps.begin(), endps.begin() + i, endps.end());
    blossombase_[b] = blossombase_[childs[0]];
  }

  void augment_matching(int k) {
    const int v = edges_[k].first;
    const int w = edges_[k].second;
    const std::pair<int, int> starts[2] = {{v, 2 * k + 1}, {w, 2 * k}};
    for (auto [s, p] : starts) {
      for (;;) {
        const int bs = inblossom_[s];
        if (bs >= n_) augment_blossom(bs, s);
        mate_[s] = p;
        if (labelend_[bs] == -1) break;
        const int t = endpoint_[labelend_[bs]];
        const int bt = inblossom_[t];
        s = endpoint_[labelend_[bt]];
        const int j = endpoint_[labelend_[bt] ^ 1];
        if (bt >= n_) augment_blossom(bt, j);
        mate_[j] = labelend_[bt];
        p = labelend_[bt] ^ 1;
      }
    }
  }

  int n_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::int64_t> weight_;
  std::vector<int> endpoint_;
  std::vector<std::vector<int>> neighbend_;
  std::vector<int> mate_;
  std::vector<int> label_;
  std::vector<int> labelend_;
  std::vector<int> inblossom_;
  std::vector<int> blossomparent_;
  std::vector<std::vector<int>> blossomchilds_;
  std::vector<int> blossombase_;
  std::vector<std::vector<int>> blossomendps_;
  std::vector<int> bestedge_;
  std::vector<std::vector<int>> blossombestedges_;
  std::vector<bool> has_bestedges_;
  std::vector<int> unused_;
  std::vector<std::int64_t> dualvar_;
  std::vector<bool> allowedge_;
  std::vector<int> queue_;
};

}  // namespace

std::vector<int> max_weight_matching(int num_nodes, const std::vector<std::pair<int, int>>& endpoints,
                                     const std::vector<std::int64_t>& weights) {
  if (endpoints.size() != weights.size()) throw ValidationError("matching: endpoint/weight count mismatch");
  for (const auto& [i, j] : endpoints) {
    if (i < 0 || j < 0 || i >= num_nodes || j >= num_nodes || i == j) {
      throw ValidationError("matching: invalid edge endpoints");
    }
  }
  return BlossomSolver(num_nodes, endpoints, weights).solve();
}

}  // namespace dosematch
