#include <stdio.h>
#include <string.h>
#include "pqgi.h"

#define CHECK(expr)                                                        \
  do {                                                                     \
    PqgiStatus s_ = (expr);                                                \
    if (s_ != PQGI_STATUS_OK) {                                            \
      fprintf(stderr, "%s -> %d: %s\n", #expr, (int)s_,                    \
              pqgi_last_error() ? pqgi_last_error() : "(none)");           \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  const char *a_json = "{\"grid\":{\"rows\":4,\"cols\":4},\"shapes\":[{\"rect\":[0,0,1,1]}]}";
  const char *b_json = "{\"grid\":{\"rows\":4,\"cols\":4},\"shapes\":[{\"rect\":[1,1,2,2]}]}";
  PqgiScene *a = NULL, *b = NULL;
  PqgiTranscript *t = NULL;
  CHECK(pqgi_scene_from_json(a_json, &a));
  CHECK(pqgi_scene_from_json(b_json, &b));

  size_t cells[8], len = 0;
  CHECK(pqgi_scene_rasterize(a, cells, 8, &len));
  if (len != 4 || cells[0] != 1 || cells[3] != 6) return 2;

  CHECK(pqgi_run(a, b, NULL, NULL, &t));
  PqgiVerdict v;
  CHECK(pqgi_transcript_verdict(t, &v));
  size_t count = 0;
  double prob = 0.0;
  CHECK(pqgi_transcript_count(t, &count, &prob));
  char *json = NULL;
  CHECK(pqgi_transcript_to_json(t, &json));
  int has_format = strstr(json, "pqgi-transcript/1") != NULL;
  pqgi_string_free(json);

  PqgiCost cost;
  CHECK(pqgi_comm_cost(4, 4, 16, &cost));

  PqgiScene *bad = NULL;
  PqgiStatus s = pqgi_scene_from_json("{\"grid\":{\"rows\":0,\"cols\":4}}", &bad);

  printf("verdict=%d t=%zu total=%llu formula=%llu bad=%d format=%d\n", (int)v, count,
         (unsigned long long)cost.total_qubits,
         (unsigned long long)cost.paper_formula_qubits, (int)s, has_format);
  pqgi_transcript_free(t);
  pqgi_scene_free(a);
  pqgi_scene_free(b);
  return 0;
}
