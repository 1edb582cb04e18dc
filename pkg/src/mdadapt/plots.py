"""Report figures rendered to files next to the delimited output."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_training_curves(stats, path):
    """Loss and accuracy trajectories over epochs."""
    epochs = np.arange(1, stats.n_epochs() + 1)
    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(10, 4))
    ax_loss.plot(epochs, stats.cls_loss, label="classifier loss")
    ax_loss.plot(epochs, stats.adv_loss, label="adversary loss")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("loss")
    ax_loss.legend()
    ax_acc.plot(epochs, stats.speaker_acc, label="speaker acc (source)")
    ax_acc.plot(epochs, stats.domain_acc, label="domain acc (all)")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("accuracy")
    ax_acc.set_ylim(0, 1)
    ax_acc.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_score_distributions(scoreset, path, title=""):
    """Target vs nontarget score histograms."""
    scores, keys = scoreset.scores_and_keys()
    tgt = scores[[k == "target" for k in keys]]
    non = scores[[k == "nontarget" for k in keys]]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(non, bins=60, density=True, alpha=0.6, label="nontarget")
    ax.hist(tgt, bins=60, density=True, alpha=0.6, label="target")
    ax.set_xlabel("log-likelihood ratio")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
