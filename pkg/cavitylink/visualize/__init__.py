from .plot_decoupling import plot_decoupling_static, plot_decoupling_interactive, save_static_plot, \
    save_interactive_plot
