/* Smoke test of the C interface: solves a small LCP and prices a put. */
#include <stdio.h>
#include <string.h>

#include "lcp_pricer.h"

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "check failed at line %d: %s\n", __LINE__, #cond); \
      return 1;                                                       \
    }                                                                 \
  } while (0)

int main(void) {
  double lower[4] = {0.0, -1.0, -1.0, -1.0};
  double diag[4] = {3.0, 3.0, 3.0, 3.0};
  double upper[4] = {-1.0, -1.0, -1.0, 0.0};
  double b[4] = {1.0, -2.0, 0.5, -1.0};
  double c[4] = {0.0, 0.0, 0.0, 0.0};
  LcpProblemHandle *problem = NULL;
  CHECK(lcp_problem_new_tridiag(4, lower, diag, upper, b, c, &problem) == LCP_STATUS_OK);
  CHECK(lcp_problem_size(problem) == 4);

  LcpSolveOptions opts = lcp_solve_options_default();
  LcpReportHandle *report = NULL;
  CHECK(lcp_solve(problem, LCP_METHOD_POLICY, NULL, &opts, &report) == LCP_STATUS_OK);
  CHECK(lcp_report_lcp_satisfied(report));
  double x[4];
  CHECK(lcp_report_solution(report, x, 4) == LCP_STATUS_OK);
  CHECK(lcp_report_solution(report, x, 2) == LCP_STATUS_BUFFER_TOO_SMALL);
  char msg[128];
  CHECK(lcp_last_error_message(msg, sizeof msg) > 0);
  lcp_report_free(report);
  lcp_problem_free(problem);

  LcpModelParams params = lcp_model_params_default();
  LcpRunHandle *run = NULL;
  CHECK(lcp_price_american(&params, 200, 50, 1.0, LCP_METHOD_POLICY, NULL, &run) == LCP_STATUS_OK);
  double v = lcp_run_value_at(run, params.strike);
  CHECK(v > 12.0 && v < 16.0);
  lcp_run_free(run);

  printf("ok %s %.6f\n", lcp_version(), v);
  return 0;
}
