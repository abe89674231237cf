#ifndef BWKSIM_SIMPLEX_HPP
#define BWKSIM_SIMPLEX_HPP

#include <vector>

namespace bwksim {

enum class SolveStatus {
    optimal,
    infeasible,
    unbounded,
    iteration_limit,
};

const char* to_string(SolveStatus s);

enum class RowSense { le, eq };

// maximize dot(objective, x)  s.t.  rows, x >= 0
struct LinearProgram {
    int num_vars = 0;
    std::vector<double> objective;
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    std::vector<RowSense> sense;

    explicit LinearProgram(int n = 0) : num_vars(n), objective(n, 0.0) {}
    void add_row(std::vector<double> coeffs, double b, RowSense s = RowSense::le);
    int num_rows() const { return static_cast<int>(rows.size()); }
};

struct LpSolve {
    SolveStatus status = SolveStatus::optimal;
    double value = 0.0;
    std::vector<double> x;
    // One multiplier per original row. Convention: at optimality
    // value == dot(rhs, row_dual); duals of 'le' rows are >= 0, 'eq' duals are free.
    std::vector<double> row_dual;
    int iterations = 0;
};

struct SimplexOptions {
    double feas_tol = 1e-9;
    double opt_tol = 1e-9;
    double pivot_tol = 1e-11;
    // 0 means 50 * (rows + cols). Dantzig pricing switches to Bland's rule
    // after half the budget to break degenerate cycling.
    int max_iterations = 0;
};

// Dense tableau two-phase primal simplex. Instances here are small (tens to a
// few thousand rows); the tableau and all scratch space live in the solver so
// repeated solves do not reallocate.
class DenseSimplex {
  public:
    explicit DenseSimplex(SimplexOptions opts = {}) : opts_(opts) {}

    LpSolve solve(const LinearProgram& lp);

    const SimplexOptions& options() const { return opts_; }
    SimplexOptions& options() { return opts_; }

  private:
    SimplexOptions opts_;
    std::vector<double> tab_;   // (m+1) x width, row-major; last row = reduced costs
    std::vector<int> basis_;
    std::vector<int> slack_col_;  // per row, -1 if none
    std::vector<int> art_col_;    // per row, -1 if none
    std::vector<signed char> flipped_;
    int m_ = 0, width_ = 0, ncols_ = 0;

    double& at(int r, int c) { return tab_[static_cast<size_t>(r) * width_ + c]; }
    void pivot(int row, int col);
    // Runs simplex iterations on the current tableau. allow_col(j) gates entering columns.
    SolveStatus iterate(int& iters, int max_iters, int bland_after, int restrict_cols);
};

}  // namespace bwksim

#endif
