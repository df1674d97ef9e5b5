#include <stdio.h>
#include "floquet_ap.h"
int main(void) {
  FapModel *m = NULL; FapSolution *s = NULL;
  const char *j = "{\"dimension\":1,\"horizon_r\":1.0,\"A\":[[-1,0]],\"forcing\":{\"dimension\":1,\"terms\":[{\"frequency\":1.0,\"re\":[1.0],\"im\":[0.0]}]}}";
  if (fap_model_from_json(j, &m) != FAP_STATUS_OK) { printf("%s\n", fap_last_error()); return 1; }
  FapConfig c = fap_config_default();
  if (fap_solve(m, &c, &s) != FAP_STATUS_OK) return 2;
  double re, im; fap_solution_eval(s, 0.0, &re, &im, 1);
  printf("u(0) = %.12f %+.12fi\n", re, im);
  fap_solution_free(s); fap_model_free(m); return 0;
}
