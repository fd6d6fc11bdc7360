import json
import math
import unittest

import numpy as np

from mklbci.exception import ParameterError
from mklbci.pipeline.methods import (GridPoint, SubjectResult, TrainingSet,
                                     build_priors, fit_point, method_grid,
                                     run_subject, session_trials,
                                     trace_digest)
from mklbci.pipeline.session import SubjectSessions
from mklbci.synth.cohort import CohortSpec, generate_cohort
from mklbci.utils.config import ExperimentConfig


def small_config(**kwargs):
    options = dict(folds=2, c_grid=[1.0], p_grid=[2.0, math.inf], lambda_grid=[0.0, 0.5], workers=1)
    options.update(kwargs)
    return ExperimentConfig(**options).resolved()


class MethodsTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        spec = CohortSpec(n_subjects=3, channels=8, trials_per_class=10, test_trials_per_class=10, seed=5)
        cls.cohort = generate_cohort(spec)
        cls.cfg = small_config()

    def test_method_grid(self):
        cfg = small_config(c_grid=[0.1, 1.0, 10.0])
        self.assertEqual(method_grid('csp-lda', cfg), [GridPoint()])
        self.assertEqual(len(method_grid('csp-svm', cfg)), 3)
        self.assertEqual(len(method_grid('ccsp-lda', cfg)), 2)
        self.assertEqual(len(method_grid('ccsp-svm', cfg)), 6)
        self.assertEqual(len(method_grid('mkl', cfg)), 6)
        with self.assertRaises(ParameterError):
            method_grid('svm', cfg)

    def test_sort_key(self):
        points = [GridPoint(C=10.0, p=1.0), GridPoint(C=1.0, p=math.inf), GridPoint(C=1.0, p=2.0)]
        self.assertEqual(min(points, key=GridPoint.sort_key), GridPoint(C=1.0, p=2.0))
        self.assertEqual(GridPoint(C=1.0, p=math.inf).to_dict(), {'C': 1.0, 'p': 'inf', 'lambda': None})

    def test_session_trials(self):
        rec = self.cohort['S01'].calibration
        self.assertEqual(len(session_trials(rec, self.cfg)), 20)
        trials = session_trials(rec, self.cfg, limit=6)
        self.assertEqual(len(trials), 6)
        self.assertEqual(sorted(t.label for t in trials), [-1, -1, -1, 1, 1, 1])
        self.assertTrue(all(t.n_samples == 275 and t.n_channels == 8 for t in trials))

        subset = session_trials(rec, small_config(channels=('ch03', 'ch01')))
        self.assertEqual(subset[0].n_channels, 2)

    def test_single_view_mkl_is_svm(self):
        trials = session_trials(self.cohort['S01'].calibration, self.cfg)
        test = session_trials(self.cohort['S01'].test, self.cfg)
        ts = TrainingSet('S01', trials, {})

        mkl = fit_point('mkl', ts, GridPoint(C=1.0, p=2.0), self.cfg)
        svm = fit_point('csp-svm', ts, GridPoint(C=1.0), self.cfg)
        self.assertEqual(mkl.betas, {'S01': 1.0})
        np.testing.assert_allclose(mkl.decide(test), svm.decide(test), rtol=0, atol=1e-10)

    def test_views(self):
        priors = build_priors(self.cohort, self.cfg)
        trials = session_trials(self.cohort['S02'].calibration, self.cfg)
        ts = TrainingSet('S02', trials, priors)
        self.assertEqual([bank.subject_id for bank in ts.views()], ['S02', 'S01', 'S03'])
        self.assertIs(ts.bank(0.5), ts.bank(0.5))

        alphas = ts.alphas()
        self.assertEqual(list(alphas), ['S01', 'S03'])
        self.assertAlmostEqual(sum(alphas.values()), 1, delta=1e-12)

    def test_ccsp_lambda_zero_is_csp(self):
        cfg = small_config(lambda_grid=[0.0])
        csp = run_subject('csp-svm', 'S01', self.cohort, cfg)
        ccsp = run_subject('ccsp-svm', 'S01', self.cohort, cfg)
        self.assertEqual(ccsp.error, csp.error)
        self.assertEqual(ccsp.cv_error, csp.cv_error)
        self.assertEqual(ccsp.point.lam, 0.0)

    def test_run_mkl(self):
        res = run_subject('mkl', 'S01', self.cohort, self.cfg)
        self.assertEqual(res.method, 'mkl')
        self.assertTrue(0 <= res.error <= 1)
        self.assertTrue(0 <= res.cv_error <= 1)
        self.assertEqual(len(res.trace), 2)
        self.assertEqual(res.trace_hash, trace_digest(res.trace))
        self.assertEqual(set(res.betas), {'S01', 'S02', 'S03'})
        self.assertAlmostEqual(sum(res.alphas.values()), 1, delta=1e-12)
        self.assertIn(res.point.p, (2.0, math.inf))

    def test_trace_independent_of_test(self):
        without = {
            sid: SubjectSessions(subject.calibration)
            for sid, subject in self.cohort.items()
        }
        a = run_subject('ccsp-lda', 'S02', self.cohort, self.cfg)
        b = run_subject('ccsp-lda', 'S02', without, self.cfg)
        self.assertIsNone(b.error)
        self.assertIsNotNone(a.error)
        self.assertEqual(a.trace_hash, b.trace_hash)
        self.assertEqual(a.point, b.point)

    def test_calibration_limit(self):
        res = run_subject('csp-lda', 'S01', self.cohort, small_config(calibration_trials=16))
        full = run_subject('csp-lda', 'S01', self.cohort, self.cfg)
        self.assertNotEqual(res.trace_hash, '')
        self.assertEqual(res.point, full.point)

    def test_result_round_trip(self):
        res = run_subject('mkl', 'S03', self.cohort, self.cfg)
        loaded = SubjectResult.from_dict(json.loads(json.dumps(res.to_dict())))
        self.assertEqual(loaded.subject_id, res.subject_id)
        self.assertEqual(loaded.point, res.point)
        self.assertEqual(loaded.error, res.error)
        self.assertEqual(loaded.betas, res.betas)
        self.assertEqual(trace_digest(loaded.trace), res.trace_hash)

    def test_errors(self):
        with self.assertRaises(ParameterError):
            run_subject('mkl', 'S09', self.cohort, self.cfg)
        with self.assertRaises(ParameterError):
            run_subject('lda', 'S01', self.cohort, self.cfg)


class FewTrialsTransferTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        spec = CohortSpec(n_subjects=10, channels=32, similar_fraction=1.0, noise_level=1.5,
                          gain_ratio=3.0, test_trials_per_class=100, seed=11)
        cls.cohort = generate_cohort(spec)
        cls.cfg = small_config(folds=5, calibration_trials=10, lambda_grid=[0.0, 0.3, 0.6, 0.9])

    def test_ccsp_not_worse_than_csp(self):
        csp = run_subject('csp-lda', 'S01', self.cohort, self.cfg)
        ccsp = run_subject('ccsp-lda', 'S01', self.cohort, self.cfg)
        self.assertEqual(len(session_trials(self.cohort['S01'].calibration, self.cfg, limit=10)), 10)
        self.assertLessEqual(ccsp.error, csp.error)
