/* helmflow-c99 v1 */
/* S: in, D: in, u: in, v: out, t: scratch, r: scratch, t_s1: scratch, t_s2: scratch, v_s1: scratch, v_s2: scratch */
void kernel(double* S, double* D, double* u, double* v, double* t, double* r, double* t_s1, double* t_s2, double* v_s1, double* v_s2)
{
  /* g0: s0 */
  for (long i = 0; i < 3; i++) { /* g0_d0 */
    for (long j = 0; j < 3; j++) { /* g0_d1 */
      for (long k = 0; k < 3; k++) { /* g0_d2 */
        { /* s0: t_s1 */
          double acc = 0.0;
          for (long a = 0; a < 3; a++) { /* s0_inner */
            acc += S[3*i + a] * u[9*j + 3*k + a];
          }
          t_s1[9*i + 3*j + k] = acc;
        }
      }
    }
  }
  /* g1: s1 */
  for (long i = 0; i < 3; i++) { /* g1_d0 */
    for (long j = 0; j < 3; j++) { /* g1_d1 */
      for (long k = 0; k < 3; k++) { /* g1_d2 */
        { /* s1: t_s2 */
          double acc = 0.0;
          for (long a = 0; a < 3; a++) { /* s1_inner */
            acc += S[3*i + a] * t_s1[9*j + 3*k + a];
          }
          t_s2[9*i + 3*j + k] = acc;
        }
      }
    }
  }
  /* g2: s2 s3 */
  for (long i = 0; i < 3; i++) { /* g2_d0 */
    for (long j = 0; j < 3; j++) { /* g2_d1 */
      for (long k = 0; k < 3; k++) { /* g2_d2 */
        { /* s2: t */
          double acc = 0.0;
          for (long a = 0; a < 3; a++) { /* s2_inner */
            acc += S[3*i + a] * t_s2[9*j + 3*k + a];
          }
          t[9*i + 3*j + k] = acc;
        }
        { /* s3: r */
          r[9*i + 3*j + k] = D[9*i + 3*j + k] * t[9*i + 3*j + k];
        }
      }
    }
  }
  /* g3: s4 */
  for (long i = 0; i < 3; i++) { /* g3_d0 */
    for (long j = 0; j < 3; j++) { /* g3_d1 */
      for (long k = 0; k < 3; k++) { /* g3_d2 */
        { /* s4: v_s1 */
          double acc = 0.0;
          for (long a = 0; a < 3; a++) { /* s4_inner */
            acc += S[i + 3*a] * r[9*j + 3*k + a];
          }
          v_s1[9*i + 3*j + k] = acc;
        }
      }
    }
  }
  /* g4: s5 */
  for (long i = 0; i < 3; i++) { /* g4_d0 */
    for (long j = 0; j < 3; j++) { /* g4_d1 */
      for (long k = 0; k < 3; k++) { /* g4_d2 */
        { /* s5: v_s2 */
          double acc = 0.0;
          for (long a = 0; a < 3; a++) { /* s5_inner */
            acc += S[i + 3*a] * v_s1[9*j + 3*k + a];
          }
          v_s2[9*i + 3*j + k] = acc;
        }
      }
    }
  }
  /* g5: s6 */
  for (long i = 0; i < 3; i++) { /* g5_d0 */
    for (long j = 0; j < 3; j++) { /* g5_d1 */
      for (long k = 0; k < 3; k++) { /* g5_d2 */
        { /* s6: v */
          double acc = 0.0;
          for (long a = 0; a < 3; a++) { /* s6_inner */
            acc += S[i + 3*a] * v_s2[9*j + 3*k + a];
          }
          v[9*i + 3*j + k] = acc;
        }
      }
    }
  }
}
