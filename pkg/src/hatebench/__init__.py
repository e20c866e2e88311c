"""Benchmark toolkit for binary hate-speech classification on short tweets.

Two branches share one preprocessing pipeline and one held-out split:
a sparse branch (TF-IDF + abusive-count features ranked across Naive Bayes,
linear SVM and Random Forest by a cross-validation harness) and a neural
branch (CNN-BiLSTM trained with binary cross-entropy and hand-written
backpropagation).
"""

__version__ = "0.1.0"
