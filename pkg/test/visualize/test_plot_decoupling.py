import os
import tempfile
import unittest

import numpy as np
import pandas as pd
import plotly.graph_objects as go

from cavitylink.visualize import plot_decoupling_static, plot_decoupling_interactive, save_static_plot, \
    save_interactive_plot


def sweep_table():
    kappa_m = np.arange(0, 5.0)
    rows = []
    for phi in (np.pi / 2, 0.9 * np.pi):
        for solver in ('closed_form', 'rates'):
            ratio = (1 + np.cos(phi)) / (1 - np.cos(phi)) / (1 + kappa_m) ** 2
            rows.append(pd.DataFrame({'kappa_m': kappa_m, 'phi': phi, 'solver': solver, 'ratio': ratio}))
    return pd.concat(rows, ignore_index=True)


class Static(unittest.TestCase):

    def test_one_curve_per_group(self):
        fig, ax = plot_decoupling_static(sweep_table())
        self.assertEqual(len(ax.get_lines()), 4)
        self.assertEqual(ax.get_yscale(), 'log')
        save_static_plot(fig, os.devnull)

    def test_infinite_values_dropped(self):
        table = sweep_table()
        table.loc[0, 'ratio'] = np.inf
        with self.assertLogs('cavitylink.visualize.plot_decoupling', level='INFO'):
            fig, ax = plot_decoupling_static(table, group_columns=('phi', 'solver', 'missing'))
        self.assertEqual(len(ax.get_lines()[0].get_xdata()), 4)
        save_static_plot(fig, os.devnull)

    def test_linear_axis(self):
        fig, ax = plot_decoupling_static(sweep_table(), log_y=False, group_columns=())
        self.assertEqual(ax.get_yscale(), 'linear')
        self.assertEqual(len(ax.get_lines()), 1)
        save_static_plot(fig, os.devnull)

    def test_save_svg(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'sweep.svg')
            fig, _ = plot_decoupling_static(sweep_table())
            save_static_plot(fig, path)
            with open(path) as handle:
                self.assertIn('<svg', handle.read())


class Interactive(unittest.TestCase):

    def test_traces(self):
        fig = plot_decoupling_interactive(sweep_table())
        self.assertIsInstance(fig, go.Figure)
        self.assertEqual(len(fig.data), 4)
        self.assertEqual(fig.layout.yaxis.type, 'log')
        self.assertIn('solver=rates', {trace.name.split(', ')[1] for trace in fig.data})

    def test_save_html(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'sweep.html')
            save_interactive_plot(plot_decoupling_interactive(sweep_table()), path)
            self.assertGreater(os.path.getsize(path), 0)


if __name__ == '__main__':
    unittest.main()
