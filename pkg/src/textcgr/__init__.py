"""textcgr: chaos-game images from text, with authorship and genre attribution.

Pipeline: normalize text, encode it over 16 character classes as base-4
digits, cut the digits into chunks, count k-mers into 2^k x 2^k frequency
images, train a classifier (logistic regression, linear SVM, or a
trig-transform + PCA nearest-neighbor scorer) on the images, and attribute
unseen documents by aggregating per-chunk class probabilities.
"""

from .alphabet import (Base4Sequence, DigitStats, EquivalenceTable,
                       digit_stats, encode, normalize_text)
from .attribute import (NOA, AttributionResult, aggregate, apply_noa, top_k,
                        write_report_csv, write_report_json)
from .cgr import (FcgrMatrix, GrayImage, fcgr, feature_vector, kmer_cell,
                  render, write_pgm, write_png)
from .chunker import ChunkRecord, chunk, whole_document
from .classify import (FttPcaModel, LabeledImage, LrModel, Neighbor,
                       ScoreVector, SvmModel, inverse_trig_transform,
                       load_model, nearest_chunks, predict, predict_ftt_pca,
                       predict_lr, predict_svm, save_model, signature,
                       train_ftt_pca, train_lr, train_svm, trig_transform,
                       truncated_svd)
from .config import RunConfig, merge_config
from .corpus import (Corpus, Document, ImageSet, SplitPlan, build_images,
                     derive_trial_seed, federalist_categories,
                     federalist_split, fixed_split, holdout_split,
                     load_corpus, run_trials, strip_header, summarize_trials,
                     write_trials_jsonl)
from .errors import ConfigError, DataError, NumericalError, TextcgrError

__version__ = "0.1.0"
