"""
SVG figures for the command line runs (matplotlib, Agg backend).
"""
import logging
from typing import Optional, Sequence, Tuple

import matplotlib as mpl
mpl.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

mpl.rcParams.update({
    'svg.hashsalt': 'specbound',
    'svg.fonttype': 'none',
    'font.size': 9,
    'axes.labelsize': 9,
    'legend.fontsize': 8,
    'figure.figsize': (5.0, 3.2),
})

Series = Tuple[np.ndarray, np.ndarray, str]


class PlotService:
    """Polyline and heatmap SVGs"""

    @staticmethod
    def _save(fig, path: str, title: str, timestamp: bool) -> str:
        metadata = {'Title': title}
        if not timestamp:
            metadata['Date'] = None
        fig.tight_layout()
        fig.savefig(path, format='svg', metadata=metadata)
        plt.close(fig)
        logger.debug(f"Wrote figure {path}")
        return path

    @staticmethod
    def line_plot(path: str, series: Sequence[Series], xlabel: str, ylabel: str, title: str = '',
                  markers: Optional[Tuple[np.ndarray, np.ndarray]] = None, logx: bool = False,
                  logy: bool = False, timestamp: bool = True) -> str:
        """One polyline per series; markers are drawn as a scatter on top"""
        fig, ax = plt.subplots()
        for x, y, label in series:
            ax.plot(x, y, linewidth=1.0, label=label)
        if markers is not None:
            ax.scatter(markers[0], markers[1], s=14, color='black', zorder=3, label='samples')
        if logx:
            ax.set_xscale('log')
        if logy:
            ax.set_yscale('log')
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1 or markers is not None:
            ax.legend(frameon=False)
        return PlotService._save(fig, path, title, timestamp)

    @staticmethod
    def heatmap(path: str, x_axis: np.ndarray, y_axis: np.ndarray, values: np.ndarray, title: str = '',
                markers: Optional[np.ndarray] = None, timestamp: bool = True) -> str:
        """Grayscale image of values[i, j] at (x_axis[i], y_axis[j])"""
        fig, ax = plt.subplots()
        image = ax.imshow(
            np.asarray(values).T, origin='lower', cmap='gray', aspect='auto',
            extent=(x_axis[0], x_axis[-1], y_axis[0], y_axis[-1]),
        )
        fig.colorbar(image, ax=ax)
        if markers is not None:
            ax.scatter(markers[:, 0], markers[:, 1], s=10, color='red', zorder=3)
        ax.set_xlabel('x1')
        ax.set_ylabel('x2')
        if title:
            ax.set_title(title)
        return PlotService._save(fig, path, title, timestamp)
