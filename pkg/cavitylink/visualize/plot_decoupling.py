import logging

import numpy as np
import matplotlib.pyplot as plt
import plotly.graph_objects as go

logger = logging.getLogger(__name__)

AXIS_LABELS = {'kappa_m': r'$\kappa_m / \kappa_0$', 'phi': r'$\Phi$ (rad)', 'omega_ratio': r'arg$(\Omega_1/\Omega_2)$',
               'ratio_phase': r'arg$(\Omega_1/\Omega_2)$', 'ratio': r'$n_b / n_a$', 'I_m': r'$I_m / \kappa_0$',
               't': r'$\kappa_0 t$'}
PLAIN_LABELS = {'kappa_m': 'kappa_m / kappa_0', 'phi': 'Phi (rad)', 'omega_ratio': 'arg(Omega_1/Omega_2)',
                'ratio_phase': 'arg(Omega_1/Omega_2)', 'ratio': 'n_b / n_a', 'I_m': 'I_m / kappa_0', 't': 'kappa_0 t'}
LINE_STYLES = {'closed_form': '-', 'rates': '--', 'master': ':', 'effective': '-.'}


def _curves(table, x, y, group_columns):
    """Yield (label, x values, y values) for each group of rows, sorted along x."""
    group_columns = [column for column in group_columns if column in table.columns and column != x]
    if not group_columns:
        ordered = table.sort_values(x)
        yield y, ordered[x].values, ordered[y].values
        return
    for key, rows in table.groupby(group_columns, sort=True):
        key = key if isinstance(key, tuple) else (key,)
        label = ', '.join(f'{column}={value:.4g}' if isinstance(value, float) else f'{column}={value}'
                          for column, value in zip(group_columns, key))
        ordered = rows.sort_values(x)
        yield label, ordered[x].values, ordered[y].values


def plot_decoupling_static(table, x='kappa_m', y='ratio', group_columns=('phi', 'solver'), log_y=True, ax=None,
                           title='Steady-state decoupling'):
    """Line plot of ``y`` against ``x`` with one curve per group.

    :param table: pandas.DataFrame of sweep results
    :param x: swept column
    :param y: plotted column (infinite values are dropped)
    :param group_columns: columns that distinguish curves (ignored when absent)
    :param log_y: logarithmic y axis
    :param ax: matplotlib axes to draw on (a new figure is made if None)
    :return: (matplotlib Figure, Axes)
    """
    if ax is None:
        fig, ax = plt.subplots(figsize=(8, 5))
    else:
        fig = ax.figure
    finite = table[np.isfinite(table[y].astype(float))]
    if len(finite) < len(table):
        logger.info(f'Dropped {len(table) - len(finite)} rows with non-finite {y} from the plot')
    for label, xs, ys in _curves(finite, x, y, group_columns):
        style = next((s for route, s in LINE_STYLES.items() if route in label), '-')
        ax.plot(xs, ys, style, label=label)
    if log_y and (finite[y] > 0).any():
        ax.set_yscale('log')
    ax.set_xlabel(AXIS_LABELS.get(x, x))
    ax.set_ylabel(AXIS_LABELS.get(y, y))
    ax.set_title(title)
    ax.legend(fontsize=8)
    return fig, ax


def plot_decoupling_interactive(table, x='kappa_m', y='ratio', group_columns=('phi', 'solver'), log_y=True,
                                title='Steady-state decoupling'):
    """Interactive plotly version of plot_decoupling_static.

    :return: plotly.graph_objects.Figure
    """
    fig = go.Figure()
    finite = table[np.isfinite(table[y].astype(float))]
    for label, xs, ys in _curves(finite, x, y, group_columns):
        fig.add_trace(go.Scatter(x=xs, y=ys, mode='lines+markers', name=label))
    fig.update_layout(title=title, xaxis_title=PLAIN_LABELS.get(x, x), yaxis_title=PLAIN_LABELS.get(y, y),
                      template='plotly_white')
    if log_y and (finite[y] > 0).any():
        fig.update_yaxes(type='log')
    return fig


def save_static_plot(fig, output_fn):
    fig.savefig(output_fn)
    plt.close(fig)
    logger.info(f'Saved figure to {output_fn}')


def save_interactive_plot(fig, output_fn):
    fig.write_html(output_fn, include_plotlyjs='cdn')
    logger.info(f'Saved interactive figure to {output_fn}')
